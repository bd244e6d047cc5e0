//! Build one block, run a clip through it, and inspect its cost.
//!
//! ```text
//! cargo run --release --example quickstart
//! ```

use flatconv::{fill_random, Block, BlockConfig, BlockVariant, VideoShape};

fn main() -> flatconv::Result<()> {
    // A clip of 8 frames at 28x28 with 96 channels, batch 2. Storage is
    // the batch-time fold [B*T, X, Y, C]; the logical shape rides along.
    let vs = VideoShape::new(2, 8, 28, 28, 96)?;
    let clip = fill_random(&vs.fold_frames(), 42)?;

    // Parallel spatial/temporal block fused by addition, 96 -> 128.
    let config = BlockConfig::new(BlockVariant::ProposedAdd, 96, 128).with_seed(7);
    let block = Block::build(config)?;

    let (out, out_vs) = block.forward(&clip, vs)?;
    println!("input  logical {:?} stored {:?}", vs.dims(), clip.shape());
    println!("output logical {:?} stored {:?}", out_vs.dims(), out.shape());
    println!("parameters: {}", block.param_count());
    println!("flops/pass: {}", block.flops_count(vs)?);

    // The same geometry with stride 2 halves frames, width and height.
    let strided = Block::build(
        BlockConfig::new(BlockVariant::ProposedAdd, 96, 128)
            .with_stride(2)
            .with_seed(7),
    )?;
    let (_, strided_vs) = strided.forward(&clip, vs)?;
    println!("stride-2 output logical {:?}", strided_vs.dims());
    Ok(())
}
