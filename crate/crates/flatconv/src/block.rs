//! The eight spatio-temporal convolution blocks behind one interface:
//! a plain rank-5 3D convolution, the parallel spatial/temporal blocks
//! fused by addition or channel concatenation, and five factorizations
//! from the literature. Every variant except `Conv3d` keeps all
//! intermediate tensors at rank 4 or below.
//!
//! Blocks consume and produce the batch-time fold `[B*T, X, Y, C]`; the
//! logical `[B, T, X, Y, C]` geometry travels alongside as a
//! [`VideoShape`]. A block with stride `s` maps `[B, T, X, Y, Cin]` to
//! `[B, T/s, X/s, Y/s, S]` (`2S` for the concatenation variant).

use crate::conv::{conv2d, conv3d, WeightTensor};
use crate::error::{Error, Result};
use crate::tensor::{SplitMix64, Tensor, VideoShape};

/// Block flavor. `Conv3d` is the rank-5 baseline; all others operate on
/// rank-≤4 folds only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockVariant {
    Conv3d,
    R2Plus1d,
    ProposedCat,
    ProposedAdd,
    P3dA,
    P3dB,
    P3dC,
    Rank1,
}

impl BlockVariant {
    pub const ALL: [BlockVariant; 8] = [
        BlockVariant::Conv3d,
        BlockVariant::R2Plus1d,
        BlockVariant::ProposedCat,
        BlockVariant::ProposedAdd,
        BlockVariant::P3dA,
        BlockVariant::P3dB,
        BlockVariant::P3dC,
        BlockVariant::Rank1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BlockVariant::Conv3d => "conv3d",
            BlockVariant::R2Plus1d => "r2plus1d",
            BlockVariant::ProposedCat => "proposed-cat",
            BlockVariant::ProposedAdd => "proposed-add",
            BlockVariant::P3dA => "p3d-a",
            BlockVariant::P3dB => "p3d-b",
            BlockVariant::P3dC => "p3d-c",
            BlockVariant::Rank1 => "rank1",
        }
    }

    pub fn from_name(name: &str) -> Option<BlockVariant> {
        BlockVariant::ALL.iter().copied().find(|v| v.name() == name)
    }

    /// Output channels as a multiple of the configured width `S`.
    pub fn out_channel_factor(&self) -> usize {
        match self {
            BlockVariant::ProposedCat => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for BlockVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometry and mode of one block.
///
/// `out_channels` is the per-branch width `S`; the concatenation variant
/// emits `2S`. The stride applies uniformly to frames, width and height,
/// and extents must divide by it. `linear_mode` disables both the
/// rectifier and biases so factorized-vs-reference comparisons are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockConfig {
    pub variant: BlockVariant,
    pub in_channels: usize,
    pub out_channels: usize,
    pub spatial_kernel: usize,
    pub temporal_kernel: usize,
    pub stride: usize,
    pub linear_mode: bool,
    pub seed: u64,
}

impl BlockConfig {
    /// 3×3 spatial / 3-tap temporal kernels, unit stride, linear mode.
    pub fn new(variant: BlockVariant, in_channels: usize, out_channels: usize) -> Self {
        BlockConfig {
            variant,
            in_channels,
            out_channels,
            spatial_kernel: 3,
            temporal_kernel: 3,
            stride: 1,
            linear_mode: true,
            seed: 0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_kernels(mut self, spatial: usize, temporal: usize) -> Self {
        self.spatial_kernel = spatial;
        self.temporal_kernel = temporal;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_linear_mode(mut self, linear: bool) -> Self {
        self.linear_mode = linear;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for extent in [self.spatial_kernel, self.temporal_kernel] {
            if extent % 2 == 0 {
                return Err(Error::EvenKernelExtent { extent });
            }
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::invalid("block config", "zero channel count"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("block config", "zero stride"));
        }
        if self.variant == BlockVariant::R2Plus1d && self.r2plus1d_mid() == 0 {
            return Err(Error::invalid(
                "block config",
                "parameter-preserving intermediate width rounds to zero",
            ));
        }
        Ok(())
    }

    /// Channels emitted by the block (`S`, or `2S` for concatenation).
    pub fn block_out_channels(&self) -> usize {
        self.out_channels * self.variant.out_channel_factor()
    }

    /// Intermediate width `M` of the factorized (2+1)D block, chosen so
    /// spatial `d²·Cin·M` plus temporal `t·M·S` parameters equal the full
    /// `t·d²·Cin·S` budget up to the flooring loss.
    pub fn r2plus1d_mid(&self) -> usize {
        r2plus1d_mid_channels(
            self.spatial_kernel,
            self.temporal_kernel,
            self.in_channels,
            self.out_channels,
        )
    }

    /// Weight tensor shapes in draw order for this variant.
    fn weight_shapes(&self) -> Vec<Vec<usize>> {
        let d = self.spatial_kernel;
        let t = self.temporal_kernel;
        let cin = self.in_channels;
        let s = self.out_channels;
        match self.variant {
            BlockVariant::Conv3d => vec![vec![t, d, d, cin, s]],
            BlockVariant::ProposedAdd | BlockVariant::ProposedCat => {
                let mut shapes = vec![vec![d, d, cin, s]];
                if self.stride > 1 {
                    shapes.push(vec![1, 1, s, s]);
                }
                shapes.push(vec![t, 1, cin, s]);
                shapes
            }
            BlockVariant::R2Plus1d => {
                let m = self.r2plus1d_mid();
                vec![vec![d, d, cin, m], vec![t, 1, m, s]]
            }
            BlockVariant::P3dA | BlockVariant::P3dC => {
                vec![vec![d, d, cin, s], vec![t, 1, s, s]]
            }
            BlockVariant::P3dB => vec![vec![d, d, cin, s], vec![t, 1, cin, s]],
            BlockVariant::Rank1 => {
                vec![vec![1, d, cin, s], vec![d, 1, s, s], vec![t, 1, s, s]]
            }
        }
    }
}

/// Intermediate width for the (2+1)D factorization:
/// `floor(t·d²·Cin·S / (d²·Cin + t·S))`.
pub fn r2plus1d_mid_channels(d: usize, t: usize, cin: usize, s: usize) -> usize {
    (t * d * d * cin * s) / (d * d * cin + t * s)
}

/// A built block: configuration plus one weight tensor per
/// sub-convolution, drawn in a fixed order from a single seeded stream.
#[derive(Clone, Debug)]
pub struct Block {
    config: BlockConfig,
    weights: Vec<WeightTensor>,
}

impl Block {
    /// Builds a block with weights (and biases, outside linear mode)
    /// drawn from a splitmix64 stream seeded by `config.seed`.
    pub fn build(config: BlockConfig) -> Result<Block> {
        config.validate()?;
        let mut rng = SplitMix64::new(config.seed);
        let mut weights = Vec::new();
        for shape in config.weight_shapes() {
            let mut w = WeightTensor::random(&shape, &mut rng)?;
            if !config.linear_mode {
                let out_channels = *shape.last().unwrap();
                w = w.with_bias(rng.fill(&[out_channels])?)?;
            }
            weights.push(w);
        }
        Ok(Block { config, weights })
    }

    /// Builds a block from caller-supplied weights, one per
    /// sub-convolution in the same order [`Block::build`] draws them.
    pub fn with_weights(config: BlockConfig, weights: Vec<WeightTensor>) -> Result<Block> {
        config.validate()?;
        let expected = config.weight_shapes();
        if weights.len() != expected.len() {
            return Err(Error::invalid(
                "weights",
                format!("expected {} tensors, got {}", expected.len(), weights.len()),
            ));
        }
        for (w, shape) in weights.iter().zip(&expected) {
            if w.weights().shape() != shape.as_slice() {
                return Err(Error::invalid(
                    "weights",
                    format!("expected shape {:?}, got {:?}", shape, w.weights().shape()),
                ));
            }
        }
        Ok(Block { config, weights })
    }

    pub fn config(&self) -> &BlockConfig {
        &self.config
    }

    pub fn weights(&self) -> &[WeightTensor] {
        &self.weights
    }

    /// Copy of this block with the temporal-branch weights (and bias)
    /// zeroed. Only meaningful for the parallel-branch variants.
    pub fn with_zeroed_temporal(&self) -> Result<Block> {
        match self.config.variant {
            BlockVariant::ProposedAdd | BlockVariant::ProposedCat => {}
            _ => {
                return Err(Error::invalid(
                    "variant",
                    "only the parallel-branch blocks have a temporal branch to zero",
                ))
            }
        }
        let mut weights = self.weights.clone();
        let last = weights.len() - 1;
        let shape = weights[last].weights().shape().to_vec();
        let mut zeroed = WeightTensor::zeros(&shape)?;
        if weights[last].bias().is_some() {
            zeroed = zeroed.with_bias(Tensor::zeros(&[*shape.last().unwrap()])?)?;
        }
        weights[last] = zeroed;
        Ok(Block {
            config: self.config.clone(),
            weights,
        })
    }

    fn activate(&self, t: Tensor) -> Tensor {
        if self.config.linear_mode {
            t
        } else {
            t.map(|v| v.max(0.0))
        }
    }

    fn check_input(&self, x: &Tensor, vs: VideoShape) -> Result<()> {
        if vs.channels != self.config.in_channels {
            return Err(Error::ChannelMismatch {
                input: vs.channels,
                kernel: self.config.in_channels,
            });
        }
        let fold = vs.fold_frames();
        if x.shape() != fold {
            return Err(Error::invalid(
                "input",
                format!("expected batch-time fold {:?}, got {:?}", fold, x.shape()),
            ));
        }
        Ok(())
    }

    /// Logical output shape for an input shape, without running anything.
    pub fn output_shape(&self, vs: VideoShape) -> Result<VideoShape> {
        vs.strided(self.config.stride, self.config.block_out_channels())
    }

    /// Runs the block on the batch-time fold of a `[B,T,X,Y,C]` clip and
    /// returns the output fold together with the logical output shape
    /// `[B, T/s, X/s, Y/s, S]` (`2S` for the concatenation variant).
    pub fn forward(&self, x: &Tensor, vs: VideoShape) -> Result<(Tensor, VideoShape)> {
        self.check_input(x, vs)?;
        let out_vs = self.output_shape(vs)?;
        let s = self.config.stride;

        let folded = match self.config.variant {
            BlockVariant::Conv3d => {
                let x5 = x.reshape(&vs.dims())?;
                let y5 = conv3d(&x5, &self.weights[0], (s, s, s))?;
                let y5 = self.activate(y5);
                y5.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::ProposedAdd | BlockVariant::ProposedCat => {
                let (spatial, temporal) = self.parallel_branches(x, vs)?;
                let fused = if self.config.variant == BlockVariant::ProposedCat {
                    spatial.concat_last(&temporal)?
                } else {
                    spatial.add(&temporal)?
                };
                fused.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::R2Plus1d => {
                let y = self.activate(conv2d(x, &self.weights[0], (s, s))?);
                let mid = self.config.r2plus1d_mid();
                let y = y.reshape(&[vs.batch, vs.frames, out_vs.pixels(), mid])?;
                let y = self.activate(conv2d(&y, &self.weights[1], (s, 1))?);
                y.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::P3dA => {
                let y = self.activate(conv2d(x, &self.weights[0], (s, s))?);
                let y = y.reshape(&[vs.batch, vs.frames, out_vs.pixels(), self.config.out_channels])?;
                let y = self.activate(conv2d(&y, &self.weights[1], (s, 1))?);
                y.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::P3dB => {
                let pixels = x.reshape(&vs.fold_pixels())?;
                // Spatial path sees every s-th frame so both paths land on
                // the same [B, T/s, X/s * Y/s, S] geometry.
                let frames_kept = pixels.subsample_axis(1, s)?;
                let sub = frames_kept.reshape(&[
                    vs.batch * out_vs.frames,
                    vs.width,
                    vs.height,
                    vs.channels,
                ])?;
                let spatial = self.activate(conv2d(&sub, &self.weights[0], (s, s))?);
                let spatial = spatial.reshape(&[
                    vs.batch,
                    out_vs.frames,
                    out_vs.pixels(),
                    self.config.out_channels,
                ])?;
                let temporal =
                    self.activate(conv2d(&pixels, &self.weights[1], (s, s * s))?);
                spatial.add(&temporal)?.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::P3dC => {
                let y = self.activate(conv2d(x, &self.weights[0], (s, s))?);
                let y = y.reshape(&[vs.batch, vs.frames, out_vs.pixels(), self.config.out_channels])?;
                let temporal = self.activate(conv2d(&y, &self.weights[1], (s, 1))?);
                let skip = y.subsample_axis(1, s)?;
                temporal.add(&skip)?.reshape(&out_vs.fold_frames())?
            }
            BlockVariant::Rank1 => {
                let y = self.activate(conv2d(x, &self.weights[0], (1, s))?);
                let y = self.activate(conv2d(&y, &self.weights[1], (s, 1))?);
                let y = y.reshape(&[vs.batch, vs.frames, out_vs.pixels(), self.config.out_channels])?;
                let y = self.activate(conv2d(&y, &self.weights[2], (s, 1))?);
                y.reshape(&out_vs.fold_frames())?
            }
        };

        Ok((folded, out_vs))
    }

    /// Pre-fusion outputs of the spatial and temporal branches of the
    /// parallel variants, both shaped `[B, T/s, X/s * Y/s, S]`. Returns
    /// `None` for variants without parallel branches.
    pub fn branch_outputs(
        &self,
        x: &Tensor,
        vs: VideoShape,
    ) -> Result<Option<(Tensor, Tensor)>> {
        match self.config.variant {
            BlockVariant::ProposedAdd | BlockVariant::ProposedCat => {
                self.check_input(x, vs)?;
                self.output_shape(vs)?;
                Ok(Some(self.parallel_branches(x, vs)?))
            }
            _ => Ok(None),
        }
    }

    fn parallel_branches(&self, x: &Tensor, vs: VideoShape) -> Result<(Tensor, Tensor)> {
        let s = self.config.stride;
        let width = self.config.out_channels;
        let out_vs = vs.strided(s, width)?;

        // Spatial branch: per-frame d×d convolution on the batch-time
        // fold, flattened pixels, then a strided 1×1 pass that pools the
        // frame axis when the block is strided.
        let mut spatial = self.activate(conv2d(x, &self.weights[0], (s, s))?);
        spatial = spatial.reshape(&[vs.batch, vs.frames, out_vs.pixels(), width])?;
        if s > 1 {
            spatial = self.activate(conv2d(&spatial, &self.weights[1], (s, 1))?);
        }

        // Temporal branch: t×1 convolution over (frames, flattened
        // pixels); the squared pixel stride matches the spatial branch's
        // per-axis striding in one pass.
        let pixels = x.reshape(&vs.fold_pixels())?;
        let temporal_weights = self.weights.last().unwrap();
        let temporal = self.activate(conv2d(&pixels, temporal_weights, (s, s * s))?);

        Ok((spatial, temporal))
    }

    /// Exact number of stored parameters.
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(WeightTensor::param_count).sum()
    }

    /// Analytic FLOP count for one forward pass at the given input
    /// shape; see [`flops_count`].
    pub fn flops_count(&self, vs: VideoShape) -> Result<u64> {
        flops_count(&self.config, vs)
    }
}

/// Parameter count a built block will have, computed without allocating
/// weights.
pub fn analytic_param_count(config: &BlockConfig) -> usize {
    config
        .weight_shapes()
        .iter()
        .map(|shape| {
            let weights: usize = shape.iter().product();
            let bias = if config.linear_mode {
                0
            } else {
                *shape.last().unwrap()
            };
            weights + bias
        })
        .sum()
}

/// Analytic FLOP count: over each sub-convolution,
/// `2 · kernel-taps · Cin · Cout · output-positions`, where 2 counts the
/// multiply and the accumulate. Activations, fusion adds and biases are
/// not counted.
pub fn flops_count(config: &BlockConfig, vs: VideoShape) -> Result<u64> {
    config.validate()?;
    let out_vs = vs.strided(config.stride, config.block_out_channels())?;
    let d = config.spatial_kernel as u64;
    let t = config.temporal_kernel as u64;
    let cin = config.in_channels as u64;
    let s = config.out_channels as u64;
    let b = vs.batch as u64;
    let frames_in = vs.frames as u64;
    let frames_out = out_vs.frames as u64;
    let width_in = vs.width as u64;
    let pixels_out = (out_vs.width * out_vs.height) as u64;
    let height_out = out_vs.height as u64;

    let conv = |taps: u64, cin: u64, cout: u64, positions: u64| 2 * taps * cin * cout * positions;

    let total = match config.variant {
        BlockVariant::Conv3d => conv(t * d * d, cin, s, b * frames_out * pixels_out),
        BlockVariant::ProposedAdd | BlockVariant::ProposedCat => {
            let spatial = conv(d * d, cin, s, b * frames_in * pixels_out);
            let pool = if config.stride > 1 {
                conv(1, s, s, b * frames_out * pixels_out)
            } else {
                0
            };
            let temporal = conv(t, cin, s, b * frames_out * pixels_out);
            spatial + pool + temporal
        }
        BlockVariant::R2Plus1d => {
            let m = config.r2plus1d_mid() as u64;
            conv(d * d, cin, m, b * frames_in * pixels_out)
                + conv(t, m, s, b * frames_out * pixels_out)
        }
        BlockVariant::P3dA | BlockVariant::P3dC => {
            conv(d * d, cin, s, b * frames_in * pixels_out)
                + conv(t, s, s, b * frames_out * pixels_out)
        }
        BlockVariant::P3dB => {
            conv(d * d, cin, s, b * frames_out * pixels_out)
                + conv(t, cin, s, b * frames_out * pixels_out)
        }
        BlockVariant::Rank1 => {
            conv(d, cin, s, b * frames_in * width_in * height_out)
                + conv(d, s, s, b * frames_in * pixels_out)
                + conv(t, s, s, b * frames_out * pixels_out)
        }
    };
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::with_mac_count;
    use crate::tensor::{fill_random, track_max_rank};

    fn input(vs: VideoShape, seed: u64) -> Tensor {
        fill_random(&vs.fold_frames(), seed).unwrap()
    }

    #[test]
    fn conv3d_block_has_one_full_kernel() {
        let block = Block::build(BlockConfig::new(BlockVariant::Conv3d, 96, 128)).unwrap();
        assert_eq!(block.weights().len(), 1);
        assert_eq!(block.weights()[0].weights().shape(), &[3, 3, 3, 96, 128]);
        assert_eq!(block.param_count(), 331_776);
    }

    #[test]
    fn parallel_block_at_unit_stride_has_two_kernels() {
        let block = Block::build(BlockConfig::new(BlockVariant::ProposedAdd, 96, 128)).unwrap();
        assert_eq!(block.weights().len(), 2);
        assert_eq!(block.param_count(), 147_456);

        let strided =
            Block::build(BlockConfig::new(BlockVariant::ProposedAdd, 96, 128).with_stride(2))
                .unwrap();
        assert_eq!(strided.weights().len(), 3);
        assert_eq!(strided.weights()[1].weights().shape(), &[1, 1, 128, 128]);
    }

    #[test]
    fn r2plus1d_preserves_parameters() {
        let cfg = BlockConfig::new(BlockVariant::R2Plus1d, 128, 128);
        assert_eq!(cfg.r2plus1d_mid(), 288);
        let block = Block::build(cfg).unwrap();
        let reference = Block::build(BlockConfig::new(BlockVariant::Conv3d, 128, 128)).unwrap();
        assert_eq!(block.param_count(), 442_368);
        assert_eq!(block.param_count(), reference.param_count());
    }

    #[test]
    fn analytic_params_match_allocated_weights() {
        for variant in BlockVariant::ALL {
            for (stride, linear) in [(1, true), (2, true), (1, false), (2, false)] {
                let cfg = BlockConfig::new(variant, 6, 10)
                    .with_stride(stride)
                    .with_linear_mode(linear)
                    .with_seed(3);
                let block = Block::build(cfg.clone()).unwrap();
                assert_eq!(
                    block.param_count(),
                    analytic_param_count(&cfg),
                    "variant {variant} stride {stride} linear {linear}"
                );
            }
        }
    }

    #[test]
    fn forward_shapes_follow_table_geometry() {
        let vs = VideoShape::new(2, 8, 28, 28, 96).unwrap();
        let block = Block::build(BlockConfig::new(BlockVariant::ProposedAdd, 96, 128)).unwrap();
        let (out, out_vs) = block.forward(&input(vs, 1), vs).unwrap();
        assert_eq!(out_vs, VideoShape::new(2, 8, 28, 28, 128).unwrap());
        assert_eq!(out.shape(), &[16, 28, 28, 128]);
    }

    #[test]
    fn strided_forward_halves_every_axis() {
        let vs = VideoShape::new(2, 8, 28, 28, 128).unwrap();
        let block = Block::build(
            BlockConfig::new(BlockVariant::ProposedAdd, 128, 256).with_stride(2),
        )
        .unwrap();
        let (out, out_vs) = block.forward(&input(vs, 2), vs).unwrap();
        assert_eq!(out_vs, VideoShape::new(2, 4, 14, 14, 256).unwrap());
        assert_eq!(out.shape(), &[8, 14, 14, 256]);
    }

    #[test]
    fn concat_variant_doubles_channels() {
        let vs = VideoShape::new(1, 4, 6, 6, 3).unwrap();
        let block = Block::build(BlockConfig::new(BlockVariant::ProposedCat, 3, 4)).unwrap();
        let (out, out_vs) = block.forward(&input(vs, 3), vs).unwrap();
        assert_eq!(out_vs.channels, 8);
        assert_eq!(out.shape(), &[4, 6, 6, 8]);
    }

    #[test]
    fn every_variant_meets_the_shape_contract() {
        for variant in BlockVariant::ALL {
            for stride in [1usize, 2] {
                let vs = VideoShape::new(2, 4, 6, 8, 3).unwrap();
                let cfg = BlockConfig::new(variant, 3, 4).with_stride(stride).with_seed(9);
                let block = Block::build(cfg.clone()).unwrap();
                let (out, out_vs) = block.forward(&input(vs, 4), vs).unwrap();
                let expected = vs.strided(stride, cfg.block_out_channels()).unwrap();
                assert_eq!(out_vs, expected, "variant {variant} stride {stride}");
                assert_eq!(out.shape(), expected.fold_frames());
            }
        }
    }

    #[test]
    fn indivisible_extent_is_a_geometry_error() {
        let vs = VideoShape::new(1, 5, 6, 6, 2).unwrap();
        let block =
            Block::build(BlockConfig::new(BlockVariant::P3dA, 2, 4).with_stride(2)).unwrap();
        assert!(matches!(
            block.forward(&input(vs, 5), vs),
            Err(Error::IndivisibleExtent { axis: "frames", .. })
        ));
    }

    #[test]
    fn branch_shapes_match_before_fusion() {
        for stride in [1usize, 2] {
            let vs = VideoShape::new(1, 4, 6, 8, 3).unwrap();
            let block = Block::build(
                BlockConfig::new(BlockVariant::ProposedAdd, 3, 5).with_stride(stride),
            )
            .unwrap();
            let (spatial, temporal) = block.branch_outputs(&input(vs, 6), vs).unwrap().unwrap();
            assert_eq!(spatial.shape(), temporal.shape(), "stride {stride}");
        }
    }

    #[test]
    fn zeroed_temporal_branch_reduces_to_spatial() {
        let vs = VideoShape::new(1, 4, 6, 6, 3).unwrap();
        let x = input(vs, 7);
        let block = Block::build(BlockConfig::new(BlockVariant::ProposedAdd, 3, 4)).unwrap();
        let zeroed = block.with_zeroed_temporal().unwrap();
        let (spatial, _) = block.branch_outputs(&x, vs).unwrap().unwrap();
        let (out, out_vs) = zeroed.forward(&x, vs).unwrap();
        let spatial_fold = spatial.reshape(&out_vs.fold_frames()).unwrap();
        assert!(out.bit_eq(&spatial_fold));
    }

    #[test]
    fn flops_single_position_unit_channels() {
        let cfg = BlockConfig::new(BlockVariant::Conv3d, 1, 1);
        let vs = VideoShape::new(1, 1, 1, 1, 1).unwrap();
        assert_eq!(flops_count(&cfg, vs).unwrap(), 54);
    }

    #[test]
    fn parallel_block_is_12_of_27_of_the_baseline() {
        let vs = VideoShape::new(1, 4, 6, 6, 8).unwrap();
        let add = flops_count(&BlockConfig::new(BlockVariant::ProposedAdd, 8, 8), vs).unwrap();
        let full = flops_count(&BlockConfig::new(BlockVariant::Conv3d, 8, 8), vs).unwrap();
        assert_eq!(add * 27, full * 12);
    }

    #[test]
    fn instrumented_multiplies_equal_half_the_analytic_flops() {
        let vs = VideoShape::new(1, 2, 4, 4, 2).unwrap();
        for variant in BlockVariant::ALL {
            for stride in [1usize, 2] {
                let cfg = BlockConfig::new(variant, 2, 3).with_stride(stride).with_seed(8);
                let block = Block::build(cfg.clone()).unwrap();
                let x = input(vs, 9);
                let (result, macs) = with_mac_count(|| block.forward(&x, vs));
                result.unwrap();
                assert_eq!(
                    2 * macs,
                    flops_count(&cfg, vs).unwrap(),
                    "variant {variant} stride {stride}"
                );
            }
        }
    }

    #[test]
    fn factorized_blocks_never_allocate_rank_5() {
        let vs = VideoShape::new(1, 4, 6, 6, 3).unwrap();
        for variant in BlockVariant::ALL {
            let block = Block::build(BlockConfig::new(variant, 3, 4)).unwrap();
            let x = input(vs, 10);
            let (result, max_rank) = track_max_rank(|| block.forward(&x, vs));
            result.unwrap();
            if variant == BlockVariant::Conv3d {
                assert_eq!(max_rank, 5);
            } else {
                assert!(max_rank <= 4, "variant {variant} reached rank {max_rank}");
            }
        }
    }

    #[test]
    fn forward_is_bit_identical_across_worker_counts() {
        let vs = VideoShape::new(1, 4, 12, 12, 4).unwrap();
        let block = Block::build(BlockConfig::new(BlockVariant::ProposedAdd, 4, 8)).unwrap();
        let x = input(vs, 11);
        let mut outputs = Vec::new();
        for threads in [1usize, 2, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            outputs.push(pool.install(|| block.forward(&x, vs).unwrap().0));
        }
        assert!(outputs[0].bit_eq(&outputs[1]));
        assert!(outputs[0].bit_eq(&outputs[2]));
    }

    #[test]
    fn nonlinear_mode_rectifies_and_adds_bias() {
        let vs = VideoShape::new(1, 2, 4, 4, 2).unwrap();
        let linear = Block::build(BlockConfig::new(BlockVariant::P3dA, 2, 3)).unwrap();
        let nonlinear = Block::build(
            BlockConfig::new(BlockVariant::P3dA, 2, 3).with_linear_mode(false),
        )
        .unwrap();
        assert_eq!(nonlinear.param_count(), linear.param_count() + 3 + 3);
        let x = input(vs, 12);
        let (out, _) = nonlinear.forward(&x, vs).unwrap();
        assert!(out.data().iter().all(|&v| v >= 0.0));
    }
}
