//! Direct (loop-based) convolution primitives with channels-last layout:
//! `conv1d`, `conv2d` with independent per-axis strides, and a rank-5
//! `conv3d` reference used as the equivalence oracle for every
//! factorized block.
//!
//! All convolutions use "same" zero padding (output extent = ceil(in /
//! stride)) and accumulate each output element over a fixed tap order,
//! so results are bit-identical regardless of how many worker threads
//! run, and a multiply-counting mode can replay the exact same
//! arithmetic serially.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{SplitMix64, Tensor};

/// Output extent of a same-padded convolution: `ceil(input / stride)`.
pub fn out_extent(input: usize, kernel: usize, stride: usize) -> usize {
    debug_assert!(kernel % 2 == 1, "kernel extent {kernel} must be odd");
    debug_assert!(input >= 1 && stride >= 1);
    input.div_ceil(stride)
}

/// Full filter geometry for a 3D convolution: temporal × width × height
/// kernel extents, the input-channel span, output channels, and per-axis
/// strides over (frames, width, height).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelSpec {
    pub temporal: usize,
    pub width: usize,
    pub height: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub strides: [usize; 3],
    pub bias: bool,
}

impl KernelSpec {
    pub fn new(
        temporal: usize,
        width: usize,
        height: usize,
        in_channels: usize,
        out_channels: usize,
    ) -> Self {
        KernelSpec {
            temporal,
            width,
            height,
            in_channels,
            out_channels,
            strides: [1, 1, 1],
            bias: false,
        }
    }

    pub fn with_strides(mut self, strides: [usize; 3]) -> Self {
        self.strides = strides;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for extent in [self.temporal, self.width, self.height] {
            if extent % 2 == 0 {
                return Err(Error::EvenKernelExtent { extent });
            }
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::invalid("kernel spec", "zero channel extent"));
        }
        if self.strides.contains(&0) {
            return Err(Error::invalid("kernel spec", "zero stride"));
        }
        Ok(())
    }

    /// Shape of the full weight tensor `[t, w, h, c, S]`.
    pub fn weight_shape(&self) -> [usize; 5] {
        [
            self.temporal,
            self.width,
            self.height,
            self.in_channels,
            self.out_channels,
        ]
    }

    pub fn param_count(&self) -> usize {
        let weights = self.temporal * self.width * self.height * self.in_channels * self.out_channels;
        weights + if self.bias { self.out_channels } else { 0 }
    }

    /// Randomly initialized weights drawn from `rng`.
    pub fn random_weights(&self, rng: &mut SplitMix64) -> Result<WeightTensor> {
        self.validate()?;
        let weights = rng.fill(&self.weight_shape())?;
        let out = WeightTensor::new(weights)?;
        if self.bias {
            out.with_bias(rng.fill(&[self.out_channels])?)
        } else {
            Ok(out)
        }
    }
}

/// Convolution weights plus an optional per-output-channel bias.
///
/// The weight tensor's rank selects the primitive it feeds:
/// `[k, Cin, S]` for `conv1d`, `[ka, kb, Cin, S]` for `conv2d`, and
/// `[t, w, h, Cin, S]` for `conv3d`. Output channels are always the last
/// axis. Convolved extents must be odd.
#[derive(Clone, Debug)]
pub struct WeightTensor {
    weights: Tensor,
    bias: Option<Tensor>,
}

impl WeightTensor {
    pub fn new(weights: Tensor) -> Result<Self> {
        if weights.rank() < 3 {
            return Err(Error::RankExpected {
                op: "weight tensor",
                expected: 3,
                got: weights.rank(),
            });
        }
        let convolved = &weights.shape()[..weights.rank() - 2];
        for &extent in convolved {
            if extent % 2 == 0 {
                return Err(Error::EvenKernelExtent { extent });
            }
        }
        Ok(WeightTensor {
            weights,
            bias: None,
        })
    }

    pub fn with_bias(mut self, bias: Tensor) -> Result<Self> {
        let out_channels = self.out_channels();
        if bias.shape() != [out_channels] {
            return Err(Error::invalid(
                "bias",
                format!("expected shape [{out_channels}], got {:?}", bias.shape()),
            ));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn random(shape: &[usize], rng: &mut SplitMix64) -> Result<Self> {
        Self::new(rng.fill(shape)?)
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(Tensor::zeros(shape)?)
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> Option<&Tensor> {
        self.bias.as_ref()
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape()[self.weights.rank() - 2]
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape()[self.weights.rank() - 1]
    }

    /// Number of stored parameters (weights plus bias when present).
    pub fn param_count(&self) -> usize {
        self.weights.elements() + self.bias.as_ref().map_or(0, Tensor::elements)
    }

    fn bias_slice(&self) -> Option<&[f64]> {
        self.bias.as_ref().map(Tensor::data)
    }
}

// ---------------------------------------------------------------------------
// Multiply counting
//
// When enabled (thread-local), convolutions run their serial path and count
// every multiply they execute. The serial and parallel paths share one loop
// body, so enabling the counter never changes numeric results.

thread_local! {
    static MAC_COUNTING: std::cell::Cell<bool> = const { std::cell::Cell::new(false) };
    static MAC_COUNT: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Runs `f` with multiply counting enabled on this thread and returns its
/// result together with the number of multiplies executed by convolution
/// kernels while it ran.
pub fn with_mac_count<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let was = MAC_COUNTING.with(|c| c.replace(true));
    let before = MAC_COUNT.with(|c| c.get());
    let out = f();
    let after = MAC_COUNT.with(|c| c.get());
    MAC_COUNTING.with(|c| c.set(was));
    (out, after - before)
}

fn mac_counting() -> bool {
    MAC_COUNTING.with(|c| c.get())
}

#[inline(always)]
fn record_mul() {
    MAC_COUNT.with(|c| c.set(c.get() + 1));
}

// Below this many multiplies the rayon dispatch overhead outweighs the win.
const PARALLEL_MAC_THRESHOLD: u64 = 1 << 17;

// ---------------------------------------------------------------------------
// conv2d

/// 2D convolution on `[N, A, B, Cin]` with weights `[ka, kb, Cin, S]` and
/// independent strides `(sa, sb)`; output `[N, ceil(A/sa), ceil(B/sb), S]`.
///
/// `out[n,i,j,s] = Σ_{a,b,c} x_pad[n, i*sa+a, j*sb+b, c] * w[a,b,c,s] (+ bias[s])`
pub fn conv2d(x: &Tensor, kernel: &WeightTensor, strides: (usize, usize)) -> Result<Tensor> {
    if x.rank() != 4 {
        return Err(Error::RankExpected {
            op: "conv2d input",
            expected: 4,
            got: x.rank(),
        });
    }
    if kernel.weights().rank() != 4 {
        return Err(Error::RankExpected {
            op: "conv2d kernel",
            expected: 4,
            got: kernel.weights().rank(),
        });
    }
    let (sa, sb) = strides;
    if sa == 0 || sb == 0 {
        return Err(Error::invalid("strides", "stride must be positive"));
    }
    let [n, a_in, b_in, c_in] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]];
    let wshape = kernel.weights().shape();
    let (ka, kb) = (wshape[0], wshape[1]);
    if wshape[2] != c_in {
        return Err(Error::ChannelMismatch {
            input: c_in,
            kernel: wshape[2],
        });
    }
    let s_out = wshape[3];

    let padded = x.pad_same(1, ka)?.pad_same(2, kb)?;
    let (pa, pb) = (padded.shape()[1], padded.shape()[2]);
    let ao = out_extent(a_in, ka, sa);
    let bo = out_extent(b_in, kb, sb);

    let xp = padded.data();
    let w = kernel.weights().data();
    let bias = kernel.bias_slice();
    let mut out = vec![0.0; n * ao * bo * s_out];

    let row = |row_idx: usize, out_row: &mut [f64], hook_counting: bool| {
        let n_idx = row_idx / ao;
        let i = row_idx % ao;
        let mut acc = vec![0.0; s_out];
        for j in 0..bo {
            acc.fill(0.0);
            for a in 0..ka {
                let x_row = ((n_idx * pa + (i * sa + a)) * pb + j * sb) * c_in;
                for b in 0..kb {
                    let xs = &xp[x_row + b * c_in..x_row + (b + 1) * c_in];
                    let w_base = (a * kb + b) * c_in * s_out;
                    for (c, &xv) in xs.iter().enumerate() {
                        let ws = &w[w_base + c * s_out..w_base + (c + 1) * s_out];
                        if hook_counting {
                            for (o, &wv) in acc.iter_mut().zip(ws) {
                                record_mul();
                                *o += xv * wv;
                            }
                        } else {
                            for (o, &wv) in acc.iter_mut().zip(ws) {
                                *o += xv * wv;
                            }
                        }
                    }
                }
            }
            if let Some(bias) = bias {
                for (o, &bv) in acc.iter_mut().zip(bias) {
                    *o += bv;
                }
            }
            out_row[j * s_out..(j + 1) * s_out].copy_from_slice(&acc);
        }
    };

    let total_macs = (n * ao * bo) as u64 * (ka * kb * c_in * s_out) as u64;
    if mac_counting() {
        for (idx, chunk) in out.chunks_mut(bo * s_out).enumerate() {
            row(idx, chunk, true);
        }
    } else if total_macs >= PARALLEL_MAC_THRESHOLD {
        out.par_chunks_mut(bo * s_out)
            .enumerate()
            .for_each(|(idx, chunk)| row(idx, chunk, false));
    } else {
        for (idx, chunk) in out.chunks_mut(bo * s_out).enumerate() {
            row(idx, chunk, false);
        }
    }

    Tensor::from_vec(out, &[n, ao, bo, s_out])
}

// ---------------------------------------------------------------------------
// conv1d

/// 1D convolution on `[N, L, Cin]` with weights `[k, Cin, S]`;
/// output `[N, ceil(L/stride), S]`.
pub fn conv1d(x: &Tensor, kernel: &WeightTensor, stride: usize) -> Result<Tensor> {
    if x.rank() != 3 {
        return Err(Error::RankExpected {
            op: "conv1d input",
            expected: 3,
            got: x.rank(),
        });
    }
    if kernel.weights().rank() != 3 {
        return Err(Error::RankExpected {
            op: "conv1d kernel",
            expected: 3,
            got: kernel.weights().rank(),
        });
    }
    if stride == 0 {
        return Err(Error::invalid("stride", "stride must be positive"));
    }
    let [n, l_in, c_in] = [x.shape()[0], x.shape()[1], x.shape()[2]];
    let wshape = kernel.weights().shape();
    let k = wshape[0];
    if wshape[1] != c_in {
        return Err(Error::ChannelMismatch {
            input: c_in,
            kernel: wshape[1],
        });
    }
    let s_out = wshape[2];

    let padded = x.pad_same(1, k)?;
    let pl = padded.shape()[1];
    let lo = out_extent(l_in, k, stride);

    let xp = padded.data();
    let w = kernel.weights().data();
    let bias = kernel.bias_slice();
    let counting = mac_counting();
    let mut out = vec![0.0; n * lo * s_out];

    for n_idx in 0..n {
        for i in 0..lo {
            let acc = &mut out[(n_idx * lo + i) * s_out..(n_idx * lo + i + 1) * s_out];
            for a in 0..k {
                let x_base = (n_idx * pl + (i * stride + a)) * c_in;
                for c in 0..c_in {
                    let xv = xp[x_base + c];
                    let ws = &w[(a * c_in + c) * s_out..(a * c_in + c + 1) * s_out];
                    if counting {
                        for (o, &wv) in acc.iter_mut().zip(ws) {
                            record_mul();
                            *o += xv * wv;
                        }
                    } else {
                        for (o, &wv) in acc.iter_mut().zip(ws) {
                            *o += xv * wv;
                        }
                    }
                }
            }
            if let Some(bias) = bias {
                for (o, &bv) in acc.iter_mut().zip(bias) {
                    *o += bv;
                }
            }
        }
    }

    Tensor::from_vec(out, &[n, lo, s_out])
}

// ---------------------------------------------------------------------------
// conv3d reference

/// Output shape of the rank-5 reference convolution.
pub fn conv3d_output_shape(
    input: &[usize; 5],
    spec: &KernelSpec,
) -> [usize; 5] {
    let [st, sx, sy] = spec.strides;
    [
        input[0],
        out_extent(input[1], spec.temporal, st),
        out_extent(input[2], spec.width, sx),
        out_extent(input[3], spec.height, sy),
        spec.out_channels,
    ]
}

/// Direct triple-axis convolution on a rank-5 `[B, T, X, Y, C]` tensor
/// with weights `[t, w, h, C, S]` and strides `(st, sx, sy)`.
///
/// This is the only operation that allocates rank-5 tensors; it defines
/// the reference semantics every factorized block is checked against.
pub fn conv3d(
    x: &Tensor,
    kernel: &WeightTensor,
    strides: (usize, usize, usize),
) -> Result<Tensor> {
    if x.rank() != 5 {
        return Err(Error::RankExpected {
            op: "conv3d input",
            expected: 5,
            got: x.rank(),
        });
    }
    if kernel.weights().rank() != 5 {
        return Err(Error::RankExpected {
            op: "conv3d kernel",
            expected: 5,
            got: kernel.weights().rank(),
        });
    }
    let (st, sx, sy) = strides;
    if st == 0 || sx == 0 || sy == 0 {
        return Err(Error::invalid("strides", "stride must be positive"));
    }
    let shape = x.shape();
    let [b, t_in, x_in, y_in, c_in] = [shape[0], shape[1], shape[2], shape[3], shape[4]];
    let wshape = kernel.weights().shape();
    let (kt, kx, ky) = (wshape[0], wshape[1], wshape[2]);
    if wshape[3] != c_in {
        return Err(Error::ChannelMismatch {
            input: c_in,
            kernel: wshape[3],
        });
    }
    let s_out = wshape[4];

    let padded = x.pad_same(1, kt)?.pad_same(2, kx)?.pad_same(3, ky)?;
    let (pt, px, py) = (padded.shape()[1], padded.shape()[2], padded.shape()[3]);
    let to = out_extent(t_in, kt, st);
    let xo = out_extent(x_in, kx, sx);
    let yo = out_extent(y_in, ky, sy);

    let xp = padded.data();
    let w = kernel.weights().data();
    let bias = kernel.bias_slice();
    let mut out = vec![0.0; b * to * xo * yo * s_out];

    let row = |row_idx: usize, out_row: &mut [f64], hook_counting: bool| {
        let b_idx = row_idx / (to * xo);
        let tau = (row_idx / xo) % to;
        let i = row_idx % xo;
        let mut acc = vec![0.0; s_out];
        for j in 0..yo {
            acc.fill(0.0);
            for a_t in 0..kt {
                for a_x in 0..kx {
                    let x_row = (((b_idx * pt + (tau * st + a_t)) * px + (i * sx + a_x)) * py
                        + j * sy)
                        * c_in;
                    for a_y in 0..ky {
                        let xs = &xp[x_row + a_y * c_in..x_row + (a_y + 1) * c_in];
                        let w_base = ((a_t * kx + a_x) * ky + a_y) * c_in * s_out;
                        for (c, &xv) in xs.iter().enumerate() {
                            let ws = &w[w_base + c * s_out..w_base + (c + 1) * s_out];
                            if hook_counting {
                                for (o, &wv) in acc.iter_mut().zip(ws) {
                                    record_mul();
                                    *o += xv * wv;
                                }
                            } else {
                                for (o, &wv) in acc.iter_mut().zip(ws) {
                                    *o += xv * wv;
                                }
                            }
                        }
                    }
                }
            }
            if let Some(bias) = bias {
                for (o, &bv) in acc.iter_mut().zip(bias) {
                    *o += bv;
                }
            }
            out_row[j * s_out..(j + 1) * s_out].copy_from_slice(&acc);
        }
    };

    let total_macs = (b * to * xo * yo) as u64 * (kt * kx * ky * c_in * s_out) as u64;
    if mac_counting() {
        for (idx, chunk) in out.chunks_mut(yo * s_out).enumerate() {
            row(idx, chunk, true);
        }
    } else if total_macs >= PARALLEL_MAC_THRESHOLD {
        out.par_chunks_mut(yo * s_out)
            .enumerate()
            .for_each(|(idx, chunk)| row(idx, chunk, false));
    } else {
        for (idx, chunk) in out.chunks_mut(yo * s_out).enumerate() {
            row(idx, chunk, false);
        }
    }

    Tensor::from_vec(out, &[b, to, xo, yo, s_out])
}
