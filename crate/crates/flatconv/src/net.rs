//! Residual 3D tail used for whole-network parameter/FLOP accounting and
//! end-to-end forward passes: three stages of residual blocks at widths
//! 128/256/512, stage-entry stride 2 from the second stage on, a global
//! average pool, and a linear classifier.
//!
//! The network exists in two forms that share one wiring plan:
//! [`NetPlan`] carries the layer geometry only (parameter and FLOP
//! counting without allocating any weights), and [`Eco3dNet`]
//! materializes the plan into runnable blocks.

use crate::block::{analytic_param_count, flops_count, Block, BlockConfig, BlockVariant};
use crate::conv::{conv2d, WeightTensor};
use crate::error::{Error, Result};
use crate::tensor::{SplitMix64, Tensor, VideoShape};

/// Geometry of the 3D tail. Defaults follow the reference layout: input
/// feature maps of 96 channels at 28×28, stages of two residual blocks
/// at widths 128/256/512 with entry strides 1/2/2, and a 400-way
/// classifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSpec {
    pub stage_channels: [usize; 3],
    pub stage_strides: [usize; 3],
    pub blocks_per_stage: usize,
    pub frames: usize,
    pub input_width: usize,
    pub input_height: usize,
    pub input_channels: usize,
    pub classes: usize,
    pub spatial_kernel: usize,
    pub temporal_kernel: usize,
    pub linear_mode: bool,
    pub seed: u64,
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec {
            stage_channels: [128, 256, 512],
            stage_strides: [1, 2, 2],
            blocks_per_stage: 2,
            frames: 16,
            input_width: 28,
            input_height: 28,
            input_channels: 96,
            classes: 400,
            spatial_kernel: 3,
            temporal_kernel: 3,
            linear_mode: true,
            seed: 0,
        }
    }
}

impl NetSpec {
    /// Logical shape of the input clip for batch size `batch`.
    pub fn input_shape(&self, batch: usize) -> Result<VideoShape> {
        VideoShape::new(
            batch,
            self.frames,
            self.input_width,
            self.input_height,
            self.input_channels,
        )
    }
}

/// Residual shortcut: pass the input through unchanged, or project it
/// with a strided pointwise convolution.
#[derive(Clone, Debug, PartialEq, Eq)]
enum ShortcutPlan {
    Identity,
    Projection {
        in_channels: usize,
        out_channels: usize,
        stride: usize,
    },
}

/// One residual block: two convolution blocks plus a shortcut.
#[derive(Clone, Debug)]
struct ResBlockPlan {
    conv1: BlockConfig,
    conv2: BlockConfig,
    shortcut: ShortcutPlan,
}

/// Wiring plan for one variant of the 3D tail.
#[derive(Clone, Debug)]
pub struct NetPlan {
    variant: BlockVariant,
    spec: NetSpec,
    blocks: Vec<ResBlockPlan>,
    classifier_in: usize,
}

impl NetPlan {
    /// Lays out the tail for `variant`. Channels flow through the plan,
    /// so the concatenation variant's doubled block outputs widen every
    /// downstream input. Shortcuts are identity wherever input and
    /// output geometry already match, except for the concatenation
    /// variant, which projects in every residual block (the accounting
    /// that reproduces the reported parameter gap).
    pub fn build(variant: BlockVariant, spec: &NetSpec) -> Result<NetPlan> {
        if spec.blocks_per_stage == 0 {
            return Err(Error::invalid("net spec", "blocks_per_stage must be positive"));
        }
        let mut blocks = Vec::new();
        let mut channels = spec.input_channels;
        let mut seed_counter = spec.seed;
        let mut next_seed = || {
            let s = seed_counter;
            seed_counter = seed_counter.wrapping_add(1);
            s
        };
        let factor = variant.out_channel_factor();

        for (stage, (&width, &entry_stride)) in spec
            .stage_channels
            .iter()
            .zip(&spec.stage_strides)
            .enumerate()
        {
            for block_idx in 0..spec.blocks_per_stage {
                let stride = if block_idx == 0 { entry_stride } else { 1 };
                let conv1 = BlockConfig::new(variant, channels, width)
                    .with_kernels(spec.spatial_kernel, spec.temporal_kernel)
                    .with_stride(stride)
                    .with_linear_mode(spec.linear_mode)
                    .with_seed(next_seed());
                let conv2 = BlockConfig::new(variant, width * factor, width)
                    .with_kernels(spec.spatial_kernel, spec.temporal_kernel)
                    .with_linear_mode(spec.linear_mode)
                    .with_seed(next_seed());
                conv1.validate().map_err(|e| {
                    Error::invalid("net spec", format!("stage {stage} block {block_idx}: {e}"))
                })?;
                conv2.validate()?;

                let out_channels = width * factor;
                let needs_projection = variant == BlockVariant::ProposedCat
                    || channels != out_channels
                    || stride > 1;
                let shortcut = if needs_projection {
                    ShortcutPlan::Projection {
                        in_channels: channels,
                        out_channels,
                        stride,
                    }
                } else {
                    ShortcutPlan::Identity
                };

                blocks.push(ResBlockPlan {
                    conv1,
                    conv2,
                    shortcut,
                });
                channels = out_channels;
            }
        }

        let plan = NetPlan {
            variant,
            spec: spec.clone(),
            blocks,
            classifier_in: channels,
        };
        // Geometry must divide cleanly through every stride.
        plan.stage_output_shapes(1)?;
        Ok(plan)
    }

    pub fn variant(&self) -> BlockVariant {
        self.variant
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn classifier_in(&self) -> usize {
        self.classifier_in
    }

    fn bias(&self, channels: usize) -> usize {
        if self.spec.linear_mode {
            0
        } else {
            channels
        }
    }

    /// Parameters of the convolutional tail, classifier excluded.
    pub fn backbone_param_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|block| {
                let shortcut = match block.shortcut {
                    ShortcutPlan::Identity => 0,
                    ShortcutPlan::Projection {
                        in_channels,
                        out_channels,
                        ..
                    } => in_channels * out_channels + self.bias(out_channels),
                };
                analytic_param_count(&block.conv1) + analytic_param_count(&block.conv2) + shortcut
            })
            .sum()
    }

    /// Total parameters including the classifier.
    pub fn param_count(&self) -> usize {
        self.backbone_param_count()
            + self.classifier_in * self.spec.classes
            + self.bias(self.spec.classes)
    }

    /// Analytic FLOPs of one forward pass at batch size `batch`
    /// (convolutions and the classifier; pooling and activations are
    /// not counted).
    pub fn flops_count(&self, batch: usize) -> Result<u64> {
        let mut vs = self.spec.input_shape(batch)?;
        let mut total: u64 = 0;
        for block in &self.blocks {
            total += flops_count(&block.conv1, vs)?;
            let mid = vs.strided(block.conv1.stride, block.conv1.block_out_channels())?;
            total += flops_count(&block.conv2, mid)?;
            let out = mid.strided(1, block.conv2.block_out_channels())?;
            if let ShortcutPlan::Projection {
                in_channels,
                out_channels,
                ..
            } = block.shortcut
            {
                total += 2
                    * in_channels as u64
                    * out_channels as u64
                    * (out.batch * out.frames * out.pixels()) as u64;
            }
            vs = out;
        }
        total += 2 * self.classifier_in as u64 * self.spec.classes as u64 * batch as u64;
        Ok(total)
    }

    /// Logical shape after each stage, for batch size `batch`.
    pub fn stage_output_shapes(&self, batch: usize) -> Result<Vec<VideoShape>> {
        let mut vs = self.spec.input_shape(batch)?;
        let mut shapes = Vec::new();
        for (idx, block) in self.blocks.iter().enumerate() {
            let mid = vs.strided(block.conv1.stride, block.conv1.block_out_channels())?;
            vs = mid.strided(1, block.conv2.block_out_channels())?;
            if (idx + 1) % self.spec.blocks_per_stage == 0 {
                shapes.push(vs);
            }
        }
        Ok(shapes)
    }
}

/// One row of the whole-network efficiency comparison: absolute counts
/// plus signed deltas against the rank-5 baseline.
#[derive(Clone, Debug)]
pub struct CostRow {
    pub variant: BlockVariant,
    pub params: u64,
    pub delta_params: i64,
    pub flops: u64,
    pub delta_flops: i64,
}

/// Parameter/FLOP table over every variant of the tail at one geometry,
/// in display order, with deltas taken as `conv3d - variant`.
pub fn cost_table(spec: &NetSpec, batch: usize) -> Result<Vec<CostRow>> {
    let baseline = NetPlan::build(BlockVariant::Conv3d, spec)?;
    let base_params = baseline.param_count() as u64;
    let base_flops = baseline.flops_count(batch)?;
    BlockVariant::ALL
        .iter()
        .map(|&variant| {
            let plan = NetPlan::build(variant, spec)?;
            let params = plan.param_count() as u64;
            let flops = plan.flops_count(batch)?;
            Ok(CostRow {
                variant,
                params,
                delta_params: base_params as i64 - params as i64,
                flops,
                delta_flops: base_flops as i64 - flops as i64,
            })
        })
        .collect()
}

enum Shortcut {
    Identity,
    Projection { weights: WeightTensor, stride: usize },
}

struct ResBlock {
    conv1: Block,
    conv2: Block,
    shortcut: Shortcut,
}

/// A materialized 3D tail: residual blocks, global average pool, and
/// linear classifier, all operating on the batch-time fold.
pub struct Eco3dNet {
    plan: NetPlan,
    blocks: Vec<ResBlock>,
    classifier: WeightTensor,
}

impl Eco3dNet {
    pub fn build(variant: BlockVariant, spec: &NetSpec) -> Result<Eco3dNet> {
        Self::from_plan(NetPlan::build(variant, spec)?)
    }

    pub fn from_plan(plan: NetPlan) -> Result<Eco3dNet> {
        let linear = plan.spec.linear_mode;
        let mut blocks = Vec::new();
        for (idx, block_plan) in plan.blocks.iter().enumerate() {
            let shortcut = match block_plan.shortcut {
                ShortcutPlan::Identity => Shortcut::Identity,
                ShortcutPlan::Projection {
                    in_channels,
                    out_channels,
                    stride,
                } => {
                    let mut rng =
                        SplitMix64::new(plan.spec.seed.wrapping_add(0x9E37 + idx as u64));
                    let mut weights =
                        WeightTensor::random(&[1, 1, in_channels, out_channels], &mut rng)?;
                    if !linear {
                        weights = weights.with_bias(rng.fill(&[out_channels])?)?;
                    }
                    Shortcut::Projection { weights, stride }
                }
            };
            blocks.push(ResBlock {
                conv1: Block::build(block_plan.conv1.clone())?,
                conv2: Block::build(block_plan.conv2.clone())?,
                shortcut,
            });
        }
        let mut rng = SplitMix64::new(plan.spec.seed.wrapping_add(0xC1A5));
        let mut classifier =
            WeightTensor::random(&[1, 1, plan.classifier_in, plan.spec.classes], &mut rng)?;
        if !linear {
            classifier = classifier.with_bias(rng.fill(&[plan.spec.classes])?)?;
        }
        Ok(Eco3dNet {
            plan,
            blocks,
            classifier,
        })
    }

    pub fn plan(&self) -> &NetPlan {
        &self.plan
    }

    /// Exact count of allocated parameters.
    pub fn param_count(&self) -> usize {
        let blocks: usize = self
            .blocks
            .iter()
            .map(|b| {
                let shortcut = match &b.shortcut {
                    Shortcut::Identity => 0,
                    Shortcut::Projection { weights, .. } => weights.param_count(),
                };
                b.conv1.param_count() + b.conv2.param_count() + shortcut
            })
            .sum();
        blocks + self.classifier.param_count()
    }

    /// Runs the tail on the batch-time fold of a clip shaped like
    /// `plan.spec().input_shape(batch)` and returns `[batch, classes]`
    /// logits.
    pub fn forward(&self, x: &Tensor, vs: VideoShape) -> Result<Tensor> {
        let expected = self.plan.spec.input_shape(vs.batch)?;
        if vs != expected {
            return Err(Error::invalid(
                "input",
                format!("expected logical shape {expected:?}, got {vs:?}"),
            ));
        }
        let mut x = x.clone();
        let mut vs = vs;
        for block in &self.blocks {
            let (mid, mid_vs) = block.conv1.forward(&x, vs)?;
            let (main, out_vs) = block.conv2.forward(&mid, mid_vs)?;
            let short = match &block.shortcut {
                Shortcut::Identity => x,
                Shortcut::Projection { weights, stride } => {
                    // Subsample frames through the pixel fold (rank stays
                    // at 4), then a strided pointwise projection.
                    let pixels = x.reshape(&vs.fold_pixels())?;
                    let kept = pixels.subsample_axis(1, *stride)?;
                    let fold = kept.reshape(&[
                        vs.batch * (vs.frames / stride),
                        vs.width,
                        vs.height,
                        vs.channels,
                    ])?;
                    conv2d(&fold, weights, (*stride, *stride))?
                }
            };
            x = main.add(&short)?;
            vs = out_vs;
        }

        // Global average pool over frames and pixels, per (batch, channel).
        let channels = vs.channels;
        let volume = vs.frames * vs.pixels();
        let data = x.data();
        let mut pooled = vec![0.0; vs.batch * channels];
        for b in 0..vs.batch {
            for v in 0..volume {
                let row = &data[(b * volume + v) * channels..(b * volume + v + 1) * channels];
                for (acc, value) in pooled[b * channels..(b + 1) * channels]
                    .iter_mut()
                    .zip(row)
                {
                    *acc += value;
                }
            }
        }
        let scale = 1.0 / volume as f64;
        for value in &mut pooled {
            *value *= scale;
        }

        let pooled = Tensor::from_vec(pooled, &[vs.batch, 1, 1, channels])?;
        let logits = conv2d(&pooled, &self.classifier, (1, 1))?;
        logits.reshape(&[vs.batch, self.plan.spec.classes])
    }
}
