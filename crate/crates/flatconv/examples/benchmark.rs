//! Time forward passes of a few variants at one shape and print the
//! records as CSV. The params/flops columns are analytic; latency and
//! throughput are measured on a monotonic clock after warmup runs.
//!
//! ```text
//! cargo run --release --example benchmark
//! ```

use flatconv::bench::{bench_variants, emit_csv, BenchOptions};
use flatconv::{BlockVariant, VideoShape};

fn main() -> flatconv::Result<()> {
    let vs = VideoShape::new(1, 8, 28, 28, 32)?;
    let opts = BenchOptions {
        out_channels: 64,
        reps: 5,
        warmup: 2,
        ..BenchOptions::default()
    };
    let variants = [
        BlockVariant::Conv3d,
        BlockVariant::ProposedAdd,
        BlockVariant::ProposedCat,
        BlockVariant::P3dA,
        BlockVariant::Rank1,
    ];
    let records = bench_variants(&variants, vs, &opts)?;
    print!("{}", emit_csv(&records));
    eprintln!();
    eprintln!("throughput is clip-frames/s (B*T*reps / elapsed); compare ratios, not absolutes");
    Ok(())
}
