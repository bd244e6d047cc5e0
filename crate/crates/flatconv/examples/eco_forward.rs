//! Build the residual 3D tail end to end and run a clip through it to
//! class logits, for two variants.
//!
//! ```text
//! cargo run --release --example eco_forward
//! ```

use flatconv::{fill_random, BlockVariant, Eco3dNet, NetSpec};

fn main() -> flatconv::Result<()> {
    // Scaled-down geometry so the demo runs in moments; the default
    // NetSpec holds the full 16-frame 28x28x96 layout.
    let spec = NetSpec {
        frames: 8,
        input_width: 12,
        input_height: 12,
        input_channels: 16,
        stage_channels: [24, 32, 48],
        classes: 10,
        seed: 1,
        ..NetSpec::default()
    };

    for variant in [BlockVariant::Conv3d, BlockVariant::ProposedAdd] {
        let net = Eco3dNet::build(variant, &spec)?;
        let vs = spec.input_shape(2)?;
        let clip = fill_random(&vs.fold_frames(), 9)?;
        let logits = net.forward(&clip, vs)?;
        let stage_shapes = net.plan().stage_output_shapes(2)?;

        println!("variant {}", variant.name());
        println!("  parameters: {}", net.param_count());
        for (idx, shape) in stage_shapes.iter().enumerate() {
            println!(
                "  stage {} out: [T={}, X={}, Y={}, C={}]",
                idx + 1,
                shape.frames,
                shape.width,
                shape.height,
                shape.channels
            );
        }
        println!("  logits shape: {:?}", logits.shape());
        let preview: Vec<String> = logits.data()[..4].iter().map(|v| format!("{v:.3e}")).collect();
        println!("  first logits: [{}]", preview.join(", "));
    }
    Ok(())
}
