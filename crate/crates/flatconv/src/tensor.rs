//! Dense row-major tensor storage plus the shape plumbing every other
//! module builds on: reshape, zero padding, slicing, elementwise
//! combination, deterministic random fill, and allocation-rank tracking.
//!
//! Tensors are immutable after construction and share their buffer on
//! reshape, so all operations here are pure and thread-safe.

use std::cell::Cell;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Highest rank a tensor may have. Rank-5 storage exists solely for the
/// reference 3D convolution; every other code path stays at rank 4 or
/// below, which [`RankTracker`] makes observable.
pub const MAX_RANK: usize = 5;

thread_local! {
    static RANK_TRACK_ENABLED: Cell<bool> = const { Cell::new(false) };
    static RANK_TRACK_MAX: Cell<usize> = const { Cell::new(0) };
}

fn record_rank(rank: usize) {
    RANK_TRACK_ENABLED.with(|enabled| {
        if enabled.get() {
            RANK_TRACK_MAX.with(|max| max.set(max.get().max(rank)));
        }
    });
}

/// Records the maximum rank of every tensor allocated on the current
/// thread while a tracking scope is open.
///
/// Tensor construction always happens on the calling thread (worker
/// threads only fill pre-allocated buffers), so a thread-local maximum
/// observes every allocation of the tracked computation, including ones
/// whose convolutions run in parallel internally.
pub struct RankTracker {
    _not_send: std::marker::PhantomData<*const ()>,
}

impl RankTracker {
    /// Opens a tracking scope on this thread, resetting the running maximum.
    pub fn begin() -> Self {
        RANK_TRACK_MAX.with(|max| max.set(0));
        RANK_TRACK_ENABLED.with(|enabled| enabled.set(true));
        RankTracker {
            _not_send: std::marker::PhantomData,
        }
    }

    /// Maximum rank allocated since [`RankTracker::begin`].
    pub fn max_rank_observed(&self) -> usize {
        RANK_TRACK_MAX.with(|max| max.get())
    }

    /// Closes the scope and returns the maximum observed rank.
    pub fn finish(self) -> usize {
        self.max_rank_observed()
    }
}

impl Drop for RankTracker {
    fn drop(&mut self) {
        RANK_TRACK_ENABLED.with(|enabled| enabled.set(false));
    }
}

/// Runs `f` under a [`RankTracker`] scope and returns its result together
/// with the maximum tensor rank allocated while it ran.
pub fn track_max_rank<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let tracker = RankTracker::begin();
    let out = f();
    (out, tracker.finish())
}

/// splitmix64 stream. The recurrence is pinned so that any implementation
/// of this crate's formats, in any language, produces bit-identical test
/// tensors from the same seed.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Next value in `[-1, 1)`: the top 24 bits of the raw output scaled
    /// by 2^-23, shifted down by one.
    pub fn next_f64(&mut self) -> f64 {
        let top = self.next_u64() >> 40;
        top as f64 / (1u64 << 23) as f64 - 1.0
    }

    /// Draws `shape`'s worth of values from the stream.
    pub fn fill(&mut self, shape: &[usize]) -> Result<Tensor> {
        let n = checked_elements(shape)?;
        let data: Vec<f64> = (0..n).map(|_| self.next_f64()).collect();
        Tensor::from_vec(data, shape)
    }
}

/// Deterministic tensor fill: identical `(seed, shape)` yields a
/// bit-identical tensor on every platform. The value stream depends only
/// on the seed, not the shape.
pub fn fill_random(shape: &[usize], seed: u64) -> Result<Tensor> {
    SplitMix64::new(seed).fill(shape)
}

fn checked_elements(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::RankOutOfRange { rank: shape.len() });
    }
    let mut n: usize = 1;
    for &extent in shape {
        if extent == 0 {
            return Err(Error::invalid("shape", format!("zero extent in {shape:?}")));
        }
        n = n
            .checked_mul(extent)
            .ok_or_else(|| Error::invalid("shape", format!("element count overflow in {shape:?}")))?;
    }
    Ok(n)
}

/// Dense tensor of `f64` values in row-major order (last index fastest).
///
/// The buffer is shared on clone and reshape; construction validates the
/// shape/data agreement and reports the rank to any open [`RankTracker`]
/// scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<[f64]>,
}

impl Tensor {
    fn from_parts(shape: Vec<usize>, data: Arc<[f64]>) -> Result<Self> {
        let expected = checked_elements(&shape)?;
        if expected != data.len() {
            return Err(Error::DataLenMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        record_rank(shape.len());
        Ok(Tensor { shape, data })
    }

    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        Self::from_parts(shape.to_vec(), data.into())
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = checked_elements(shape)?;
        Self::from_parts(shape.to_vec(), vec![0.0; n].into())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Total number of elements.
    pub fn elements(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Value at a multi-index; panics on a bad index (test convenience).
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let mut flat = 0usize;
        for (axis, (&i, &extent)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < extent, "index {i} out of bounds on axis {axis}");
            flat = flat * extent + i;
        }
        self.data[flat]
    }

    /// Same flat data under a new shape. Zero-copy: the buffer is shared.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Tensor> {
        let to_elements = checked_elements(new_shape)?;
        if to_elements != self.elements() {
            return Err(Error::ShapeMismatch {
                from: self.shape.clone(),
                to: new_shape.to_vec(),
                from_elements: self.elements(),
                to_elements,
            });
        }
        Self::from_parts(new_shape.to_vec(), Arc::clone(&self.data))
    }

    /// Zero-pads `floor(k/2)` elements on each side of `axis`; the padded
    /// extent is `in + k - 1`. Only odd kernel extents are supported.
    pub fn pad_same(&self, axis: usize, kernel_extent: usize) -> Result<Tensor> {
        if kernel_extent.is_multiple_of(2) {
            return Err(Error::EvenKernelExtent {
                extent: kernel_extent,
            });
        }
        self.check_axis(axis)?;
        let pad = kernel_extent / 2;
        if pad == 0 {
            return Ok(self.clone());
        }
        let extent = self.shape[axis];
        let new_extent = extent + kernel_extent - 1;
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();

        let mut out = vec![0.0; outer * new_extent * inner];
        for o in 0..outer {
            let src = &self.data[o * extent * inner..(o + 1) * extent * inner];
            let dst_base = (o * new_extent + pad) * inner;
            out[dst_base..dst_base + extent * inner].copy_from_slice(src);
        }
        let mut shape = self.shape.clone();
        shape[axis] = new_extent;
        Self::from_parts(shape, out.into())
    }

    /// Contiguous sub-range `start..start+len` along `axis`.
    pub fn slice_axis(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        self.check_axis(axis)?;
        let extent = self.shape[axis];
        if len == 0 || start + len > extent {
            return Err(Error::invalid(
                "slice",
                format!("range {start}..{} exceeds axis extent {extent}", start + len),
            ));
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * extent + start) * inner;
            out.extend_from_slice(&self.data[base..base + len * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = len;
        Self::from_parts(shape, out.into())
    }

    /// Every `step`-th position along `axis`, starting at index 0.
    pub fn subsample_axis(&self, axis: usize, step: usize) -> Result<Tensor> {
        self.check_axis(axis)?;
        if step == 0 {
            return Err(Error::invalid("subsample", "step must be positive"));
        }
        if step == 1 {
            return Ok(self.clone());
        }
        let extent = self.shape[axis];
        let kept = extent.div_ceil(step);
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * kept * inner);
        for o in 0..outer {
            for k in 0..kept {
                let base = (o * extent + k * step) * inner;
                out.extend_from_slice(&self.data[base..base + inner]);
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] = kept;
        Self::from_parts(shape, out.into())
    }

    /// Elementwise sum; shapes must match exactly.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::invalid(
                "add",
                format!("shape {:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Self::from_parts(self.shape.clone(), data.into())
    }

    /// Concatenation along the last axis; all other extents must match.
    pub fn concat_last(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != other.rank()
            || self.shape[..self.rank() - 1] != other.shape[..other.rank() - 1]
        {
            return Err(Error::invalid(
                "concat",
                format!("shape {:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let last = self.rank() - 1;
        let a_inner = self.shape[last];
        let b_inner = other.shape[last];
        let outer: usize = self.shape[..last].iter().product();
        let mut out = Vec::with_capacity(self.elements() + other.elements());
        for o in 0..outer {
            out.extend_from_slice(&self.data[o * a_inner..(o + 1) * a_inner]);
            out.extend_from_slice(&other.data[o * b_inner..(o + 1) * b_inner]);
        }
        let mut shape = self.shape.clone();
        shape[last] = a_inner + b_inner;
        Self::from_parts(shape, out.into())
    }

    /// Elementwise map into a fresh tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        Tensor {
            shape: self.shape.clone(),
            data: data.into(),
        }
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Bitwise equality of shape and every element.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.rank() {
            return Err(Error::invalid(
                "axis",
                format!("axis {axis} out of range for rank {}", self.rank()),
            ));
        }
        Ok(())
    }
}

/// Logical `[batch, frames, width, height, channels]` descriptor carried
/// alongside rank-≤4 storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VideoShape {
    pub batch: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl VideoShape {
    pub fn new(
        batch: usize,
        frames: usize,
        width: usize,
        height: usize,
        channels: usize,
    ) -> Result<Self> {
        let vs = VideoShape {
            batch,
            frames,
            width,
            height,
            channels,
        };
        if [batch, frames, width, height, channels].contains(&0) {
            return Err(Error::invalid("video shape", format!("{vs:?} has a zero extent")));
        }
        Ok(vs)
    }

    pub fn elements(&self) -> usize {
        self.batch * self.frames * self.width * self.height * self.channels
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// The 5D shape, for the reference convolution path only.
    pub fn dims(&self) -> [usize; 5] {
        [self.batch, self.frames, self.width, self.height, self.channels]
    }

    /// Batch-time fold `[B*T, X, Y, C]`: the canonical rank-4 storage.
    pub fn fold_frames(&self) -> [usize; 4] {
        [
            self.batch * self.frames,
            self.width,
            self.height,
            self.channels,
        ]
    }

    /// Pixel fold `[B, T, X*Y, C]` used by temporal convolutions.
    pub fn fold_pixels(&self) -> [usize; 4] {
        [self.batch, self.frames, self.pixels(), self.channels]
    }

    /// Shape after striding frames/width/height by `stride` with
    /// `channels` output channels. Rejects inexact division.
    pub fn strided(&self, stride: usize, channels: usize) -> Result<VideoShape> {
        if stride > 1 {
            for (axis, extent) in [
                ("frames", self.frames),
                ("width", self.width),
                ("height", self.height),
            ] {
                if extent % stride != 0 {
                    return Err(Error::IndivisibleExtent {
                        axis,
                        extent,
                        stride,
                    });
                }
            }
        }
        VideoShape::new(
            self.batch,
            self.frames / stride,
            self.width / stride,
            self.height / stride,
            channels,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reshape_folds_batch_and_frames() {
        let t = fill_random(&[2, 8, 28, 28, 6], 1).unwrap();
        let folded = t.reshape(&[16, 28, 28, 6]).unwrap();
        assert_eq!(folded.shape(), &[16, 28, 28, 6]);
        assert_eq!(folded.data(), t.data());
    }

    #[test]
    fn reshape_folds_pixels() {
        let t = fill_random(&[16, 28, 28, 6], 2).unwrap();
        let folded = t.reshape(&[2, 8, 784, 6]).unwrap();
        assert_eq!(folded.shape(), &[2, 8, 784, 6]);
        assert_eq!(folded.data(), t.data());
    }

    #[test]
    fn reshape_identity() {
        let t = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[6]).unwrap();
        let r = t.reshape(&[6]).unwrap();
        assert!(r.bit_eq(&t));
    }

    #[test]
    fn reshape_mismatch_names_both_products() {
        let t = Tensor::zeros(&[2, 3]).unwrap();
        let err = t.reshape(&[4, 2]).unwrap_err().to_string();
        assert!(err.contains('6') && err.contains('8'), "message: {err}");
    }

    #[test]
    fn pad_same_extends_extent() {
        let t = Tensor::zeros(&[4, 28, 3]).unwrap();
        let padded = t.pad_same(1, 3).unwrap();
        assert_eq!(padded.shape(), &[4, 30, 3]);
    }

    #[test]
    fn pad_same_unit_kernel_is_identity() {
        let t = fill_random(&[3, 5], 9).unwrap();
        let padded = t.pad_same(0, 1).unwrap();
        assert!(padded.bit_eq(&t));
    }

    #[test]
    fn pad_same_values() {
        let t = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[3]).unwrap();
        let padded = t.pad_same(0, 3).unwrap();
        assert_eq!(padded.data(), &[0.0, 1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn pad_same_rejects_even_kernel() {
        let t = Tensor::zeros(&[3]).unwrap();
        assert!(matches!(
            t.pad_same(0, 2),
            Err(Error::EvenKernelExtent { extent: 2 })
        ));
    }

    #[test]
    fn fill_random_is_deterministic() {
        let a = fill_random(&[3, 4, 5], 0xDEAD_BEEF).unwrap();
        let b = fill_random(&[3, 4, 5], 0xDEAD_BEEF).unwrap();
        assert!(a.bit_eq(&b));
    }

    #[test]
    fn splitmix64_reference_trace() {
        // First outputs for seed 0 from the published splitmix64 stream.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);

        let first = fill_random(&[1], 0).unwrap().data()[0];
        let expected = (0xE220_A839_7B1D_CDAFu64 >> 40) as f64 / (1u64 << 23) as f64 - 1.0;
        assert_eq!(first.to_bits(), expected.to_bits());
    }

    #[test]
    fn fill_random_values_in_half_open_unit_range() {
        let t = fill_random(&[1000], 3).unwrap();
        assert!(t.data().iter().all(|&v| (-1.0..1.0).contains(&v)));
    }

    #[test]
    fn fill_random_stream_is_shape_independent() {
        let flat = fill_random(&[4], 17).unwrap();
        let square = fill_random(&[2, 2], 17).unwrap();
        assert_eq!(flat.data(), square.data());
    }

    #[test]
    fn rank_tracker_observes_allocations() {
        let (_, max) = track_max_rank(|| {
            Tensor::zeros(&[2, 2]).unwrap();
            Tensor::zeros(&[2, 2, 2, 2]).unwrap();
        });
        assert_eq!(max, 4);
        let (_, max) = track_max_rank(|| Tensor::zeros(&[1, 1, 1, 1, 1]).unwrap());
        assert_eq!(max, 5);
    }

    #[test]
    fn rank_limit_enforced() {
        assert!(matches!(
            Tensor::zeros(&[1, 1, 1, 1, 1, 1]),
            Err(Error::RankOutOfRange { rank: 6 })
        ));
        assert!(matches!(
            Tensor::zeros(&[]),
            Err(Error::RankOutOfRange { rank: 0 })
        ));
    }

    #[test]
    fn subsample_picks_every_step() {
        let t = Tensor::from_vec((0..8).map(f64::from).collect(), &[8]).unwrap();
        let s = t.subsample_axis(0, 2).unwrap();
        assert_eq!(s.data(), &[0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn concat_last_doubles_channels() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
        let b = Tensor::from_vec(vec![5.0, 6.0, 7.0, 8.0], &[2, 2]).unwrap();
        let c = a.concat_last(&b).unwrap();
        assert_eq!(c.shape(), &[2, 4]);
        assert_eq!(c.data(), &[1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0]);
    }

    #[test]
    fn video_shape_strided_rejects_inexact_division() {
        let vs = VideoShape::new(1, 6, 6, 6, 2).unwrap();
        assert!(vs.strided(2, 4).is_ok());
        let odd = VideoShape::new(1, 5, 6, 6, 2).unwrap();
        assert!(matches!(
            odd.strided(2, 4),
            Err(Error::IndivisibleExtent { axis: "frames", .. })
        ));
    }

    fn small_shape() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..5, 1..=4)
    }

    proptest! {
        #[test]
        fn reshape_roundtrip_is_bit_exact(shape in small_shape(), seed in any::<u64>()) {
            let t = fill_random(&shape, seed).unwrap();
            let n = t.elements();
            let flat = t.reshape(&[n]).unwrap();
            let back = flat.reshape(&shape).unwrap();
            prop_assert!(back.bit_eq(&t));
        }

        #[test]
        fn pad_then_center_crop_recovers_input(
            shape in small_shape(),
            axis_pick in any::<prop::sample::Index>(),
            half_k in 0usize..3,
            seed in any::<u64>(),
        ) {
            let t = fill_random(&shape, seed).unwrap();
            let axis = axis_pick.index(shape.len());
            let k = 2 * half_k + 1;
            let padded = t.pad_same(axis, k).unwrap();
            let cropped = padded.slice_axis(axis, k / 2, shape[axis]).unwrap();
            prop_assert!(cropped.bit_eq(&t));
        }
    }
}
