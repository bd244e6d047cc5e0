//! Whole-network parameter and FLOP comparison across all variants of
//! the residual 3D tail, with deltas against the rank-5 baseline.
//!
//! ```text
//! cargo run --release --example cost_table
//! ```

use flatconv::net::{cost_table, NetSpec};

fn main() -> flatconv::Result<()> {
    let spec = NetSpec::default(); // 16 frames, 28x28x96 in, 400 classes
    let rows = cost_table(&spec, 1)?;

    println!(
        "{:<14} {:>12} {:>14} {:>16} {:>16}",
        "method", "params (M)", "delta (M)", "flops (G)", "delta (G)"
    );
    for row in rows {
        println!(
            "{:<14} {:>12.3} {:>14.3} {:>16.3} {:>16.3}",
            row.variant.name(),
            row.params as f64 / 1e6,
            row.delta_params as f64 / 1e6,
            row.flops as f64 / 1e9,
            row.delta_flops as f64 / 1e9,
        );
    }
    println!();
    println!("deltas are (conv3d - variant); positive means cheaper than the baseline");
    Ok(())
}
