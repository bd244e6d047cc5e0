//! Show the fully 1D-factorized block matching the rank-5 reference
//! convolution on a separable (outer-product) kernel.
//!
//! ```text
//! cargo run --release --example oracle_equivalence
//! ```

use flatconv::conv::conv3d;
use flatconv::tensor::SplitMix64;
use flatconv::verify::relative_diff;
use flatconv::{fill_random, Block, BlockConfig, BlockVariant, Tensor, VideoShape, WeightTensor};

fn main() -> flatconv::Result<()> {
    let channels = 2;
    let vs = VideoShape::new(1, 4, 6, 6, channels)?;
    let clip = fill_random(&vs.fold_frames(), 3)?;

    // Three 1D filters whose outer product forms the 3D kernel.
    let mut rng = SplitMix64::new(11);
    let u: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect(); // width
    let v: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect(); // height
    let q: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect(); // frames

    // Factorized path: 1xd, dx1, then temporal taps, each mapping every
    // channel to itself.
    let diag = |taps: &[f64], shape: [usize; 2]| -> flatconv::Result<WeightTensor> {
        let [ka, kb] = shape;
        let mut w = vec![0.0; ka * kb * channels * channels];
        for (i, &tap) in taps.iter().enumerate() {
            let (a, b) = if ka > kb { (i, 0) } else { (0, i) };
            for c in 0..channels {
                w[((a * kb + b) * channels + c) * channels + c] = tap;
            }
        }
        WeightTensor::new(Tensor::from_vec(w, &[ka, kb, channels, channels])?)
    };
    let block = Block::with_weights(
        BlockConfig::new(BlockVariant::Rank1, channels, channels),
        vec![diag(&v, [1, 3])?, diag(&u, [3, 1])?, diag(&q, [3, 1])?],
    )?;
    let (out, out_vs) = block.forward(&clip, vs)?;
    let factorized = out.reshape(&out_vs.dims())?;

    // Reference path: one rank-5 convolution with the outer product.
    let mut kernel = vec![0.0; 3 * 3 * 3 * channels * channels];
    for (t, &qt) in q.iter().enumerate() {
        for (a, &ua) in u.iter().enumerate() {
            for (b, &vb) in v.iter().enumerate() {
                for c in 0..channels {
                    let idx = ((((t * 3 + a) * 3 + b) * channels + c) * channels) + c;
                    kernel[idx] = qt * ua * vb;
                }
            }
        }
    }
    let kernel = WeightTensor::new(Tensor::from_vec(kernel, &[3, 3, 3, channels, channels])?)?;
    let reference = conv3d(&clip.reshape(&vs.dims())?, &kernel, (1, 1, 1))?;

    let diff = relative_diff(&reference, &factorized);
    println!("three chained 1D convolutions vs direct 3D convolution");
    println!("max relative difference: {diff:.3e} (tolerance 1e-8)");
    assert!(diff <= 1e-8);
    println!("factorization is exact for rank-1 kernels");
    Ok(())
}
