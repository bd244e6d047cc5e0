//! Observe the maximum tensor rank each variant allocates during a
//! forward pass: the factorized blocks stay at 4, the direct 3D
//! convolution needs 5.
//!
//! ```text
//! cargo run --release --example rank_tracking
//! ```

use flatconv::{fill_random, track_max_rank, Block, BlockConfig, BlockVariant, VideoShape};

fn main() -> flatconv::Result<()> {
    let vs = VideoShape::new(1, 4, 8, 8, 3)?;
    let clip = fill_random(&vs.fold_frames(), 5)?;

    println!("{:<14} max tensor rank during forward", "variant");
    for variant in BlockVariant::ALL {
        let block = Block::build(BlockConfig::new(variant, 3, 4))?;
        let (result, max_rank) = track_max_rank(|| block.forward(&clip, vs));
        result?;
        println!("{:<14} {max_rank}", variant.name());
    }
    Ok(())
}
