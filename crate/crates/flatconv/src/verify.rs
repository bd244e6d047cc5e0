//! Equivalence suites proving the rank-≤4 implementations agree with the
//! rank-5 reference convolution in every mathematically exact case, plus
//! shape-contract, rank-ceiling, determinism, and multiply-count checks
//! that validate the analytic cost model against executed arithmetic.
//!
//! Each suite returns a [`SuiteReport`]; individual cases serialize as
//! JSON lines for machine consumption.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::block::{flops_count, Block, BlockConfig, BlockVariant};
use crate::conv::{conv2d, conv3d, with_mac_count, WeightTensor};
use crate::error::Result;
use crate::net::{Eco3dNet, NetSpec};
use crate::tensor::{fill_random, track_max_rank, SplitMix64, Tensor, VideoShape};

/// Composed factorizations (several convolutions chained) must agree
/// with the reference within this relative tolerance.
pub const TOL_COMPOSED: f64 = 1e-8;
/// Single-factor folds (one convolution each side) are held tighter.
pub const TOL_SINGLE_FACTOR: f64 = 1e-10;

/// Outcome of one checked case.
#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub suite: String,
    pub case: String,
    pub passed: bool,
    pub max_rel_diff: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_digest: Option<String>,
}

/// All cases of one suite plus its wall time.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: Vec<CaseResult>,
    pub wall_ms: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn cases_run(&self) -> usize {
        self.cases.len()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

struct SuiteBuilder {
    name: String,
    cases: Vec<CaseResult>,
    started: Instant,
}

impl SuiteBuilder {
    fn new(name: &str) -> Self {
        SuiteBuilder {
            name: name.to_string(),
            cases: Vec::new(),
            started: Instant::now(),
        }
    }

    fn diff_case(&mut self, case: String, diff: f64, tolerance: f64) {
        self.cases.push(CaseResult {
            suite: self.name.clone(),
            case,
            passed: diff.is_finite() && diff <= tolerance,
            max_rel_diff: diff,
            tolerance,
            note: None,
            output_digest: None,
        });
    }

    fn bool_case(&mut self, case: String, passed: bool, note: Option<String>) {
        self.cases.push(CaseResult {
            suite: self.name.clone(),
            case,
            passed,
            max_rel_diff: if passed { 0.0 } else { f64::INFINITY },
            tolerance: 0.0,
            note,
            output_digest: None,
        });
    }

    fn error_case(&mut self, case: String, err: impl std::fmt::Display) {
        self.bool_case(case, false, Some(err.to_string()));
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.name,
            cases: self.cases,
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// `max|a-b| / (max|a| + 1e-30)` over all elements, with `a` the
/// reference. Any NaN or infinity on either side yields `INFINITY`, so
/// non-finite values fail every tolerance.
pub fn relative_diff(reference: &Tensor, candidate: &Tensor) -> f64 {
    if reference.shape() != candidate.shape() {
        return f64::INFINITY;
    }
    if !reference.all_finite() || !candidate.all_finite() {
        return f64::INFINITY;
    }
    let mut max_abs = 0.0f64;
    let mut max_diff = 0.0f64;
    for (a, b) in reference.data().iter().zip(candidate.data()) {
        max_abs = max_abs.max(a.abs());
        max_diff = max_diff.max((a - b).abs());
    }
    max_diff / (max_abs + 1e-30)
}

/// FNV-1a over the little-endian bit patterns; cross-process stable.
pub fn tensor_digest(t: &Tensor) -> String {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for value in t.data() {
        for byte in value.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    format!("{hash:016x}")
}

/// Twelve small clip geometries (even frame/pixel extents so stride 2
/// divides cleanly; extents ≤ 12, channels ≤ 4) keeping the quintuple
/// reference loop sub-second per case.
pub fn default_shape_grid() -> Vec<VideoShape> {
    [
        (1, 2, 4, 4, 1),
        (1, 2, 6, 4, 2),
        (1, 4, 4, 6, 3),
        (2, 2, 4, 4, 2),
        (1, 4, 8, 8, 1),
        (2, 4, 6, 8, 4),
        (1, 6, 6, 6, 2),
        (1, 2, 8, 6, 3),
        (2, 2, 6, 4, 1),
        (1, 4, 4, 10, 2),
        (2, 6, 8, 6, 3),
        (1, 8, 12, 8, 4),
    ]
    .into_iter()
    .map(|(b, t, x, y, c)| VideoShape::new(b, t, x, y, c).unwrap())
    .collect()
}

/// Shape contracts: every variant × stride maps `[B,T,X,Y,C]` to
/// `[B,T/s,X/s,Y/s,S or 2S]`, and the parallel variants' branches agree
/// in shape before fusion.
pub fn check_shape_contracts(grid: &[VideoShape], seed: u64) -> SuiteReport {
    let mut suite = SuiteBuilder::new("shape_contracts");
    for &vs in grid {
        for variant in BlockVariant::ALL {
            for stride in [1usize, 2] {
                let case = format!("{variant} s={stride} in={vs:?}");
                let cfg = BlockConfig::new(variant, vs.channels, 4)
                    .with_stride(stride)
                    .with_seed(seed);
                let run = (|| -> Result<(bool, Option<String>)> {
                    let block = Block::build(cfg.clone())?;
                    let x = fill_random(&vs.fold_frames(), seed ^ 0x51AB)?;
                    let (out, out_vs) = block.forward(&x, vs)?;
                    let expected = vs.strided(stride, cfg.block_out_channels())?;
                    if out_vs != expected || out.shape() != expected.fold_frames() {
                        return Ok((false, Some(format!("got {out_vs:?}, want {expected:?}"))));
                    }
                    if let Some((spatial, temporal)) = block.branch_outputs(&x, vs)? {
                        if spatial.shape() != temporal.shape() {
                            return Ok((
                                false,
                                Some(format!(
                                    "branch shapes differ: {:?} vs {:?}",
                                    spatial.shape(),
                                    temporal.shape()
                                )),
                            ));
                        }
                    }
                    Ok((true, None))
                })();
                match run {
                    Ok((passed, note)) => suite.bool_case(case, passed, note),
                    Err(e) => suite.error_case(case, e),
                }
            }
        }
    }
    suite.finish()
}

/// Rank ceiling: factorized blocks and nets never allocate above rank 4;
/// the rank-5 baseline reaches exactly 5.
pub fn check_rank_ceiling(seed: u64) -> SuiteReport {
    let mut suite = SuiteBuilder::new("rank_ceiling");
    let vs = VideoShape::new(1, 4, 6, 6, 3).unwrap();
    for variant in BlockVariant::ALL {
        let case = format!("block {variant}");
        let cfg = BlockConfig::new(variant, vs.channels, 4).with_seed(seed);
        match Block::build(cfg) {
            Ok(block) => match fill_random(&vs.fold_frames(), seed ^ 0xBEE) {
                Ok(x) => {
                    let (result, max_rank) = track_max_rank(|| block.forward(&x, vs));
                    match result {
                        Ok(_) => {
                            let ok = if variant == BlockVariant::Conv3d {
                                max_rank == 5
                            } else {
                                max_rank <= 4
                            };
                            suite.bool_case(case, ok, Some(format!("max rank {max_rank}")));
                        }
                        Err(e) => suite.error_case(case, e),
                    }
                }
                Err(e) => suite.error_case(case, e),
            },
            Err(e) => suite.error_case(case, e),
        }
    }

    let spec = NetSpec {
        frames: 4,
        input_width: 8,
        input_height: 8,
        input_channels: 6,
        stage_channels: [8, 12, 16],
        classes: 5,
        seed,
        ..NetSpec::default()
    };
    for variant in BlockVariant::ALL {
        let case = format!("net {variant}");
        let run = (|| -> Result<usize> {
            let net = Eco3dNet::build(variant, &spec)?;
            let vs = spec.input_shape(1)?;
            let x = fill_random(&vs.fold_frames(), seed ^ 0xFEED)?;
            let (result, max_rank) = track_max_rank(|| net.forward(&x, vs));
            result?;
            Ok(max_rank)
        })();
        match run {
            Ok(max_rank) => {
                let expected = if variant == BlockVariant::Conv3d { 5 } else { 4 };
                suite.bool_case(
                    case,
                    max_rank == expected,
                    Some(format!("max rank {max_rank}, expected {expected}")),
                );
            }
            Err(e) => suite.error_case(case, e),
        }
    }
    suite.finish()
}

/// Zeroing the temporal branch of the addition-fused block at unit
/// stride must reproduce its spatial branch bit-for-bit (linear mode).
pub fn check_zero_branch(grid: &[VideoShape], seed: u64) -> SuiteReport {
    let mut suite = SuiteBuilder::new("zero_branch");
    for &vs in grid {
        let case = format!("proposed-add zero-temporal in={vs:?}");
        let run = (|| -> Result<bool> {
            let cfg = BlockConfig::new(BlockVariant::ProposedAdd, vs.channels, 4).with_seed(seed);
            let block = Block::build(cfg)?;
            let x = fill_random(&vs.fold_frames(), seed ^ 0x2E20)?;
            let (spatial, _) = block.branch_outputs(&x, vs)?.expect("parallel variant");
            let zeroed = block.with_zeroed_temporal()?;
            let (out, out_vs) = zeroed.forward(&x, vs)?;
            Ok(out.bit_eq(&spatial.reshape(&out_vs.fold_frames())?))
        })();
        match run {
            Ok(passed) => suite.bool_case(case, passed, None),
            Err(e) => suite.error_case(case, e),
        }
    }
    suite.finish()
}

fn outer_product_kernel(
    temporal: &[f64],
    horizontal: &[f64],
    vertical: &[f64],
    channels: usize,
) -> Result<WeightTensor> {
    let (kt, kx, ky) = (temporal.len(), horizontal.len(), vertical.len());
    let mut w = vec![0.0; kt * kx * ky * channels * channels];
    for (a_t, &qv) in temporal.iter().enumerate() {
        for (a_x, &uv) in horizontal.iter().enumerate() {
            for (a_y, &vv) in vertical.iter().enumerate() {
                for c in 0..channels {
                    let idx = ((((a_t * kx + a_x) * ky + a_y) * channels + c) * channels) + c;
                    w[idx] = qv * uv * vv;
                }
            }
        }
    }
    WeightTensor::new(Tensor::from_vec(w, &[kt, kx, ky, channels, channels])?)
}

/// Diagonal channel map scaled by a 1D filter, in the given 4D kernel
/// orientation (`[ka, kb, C, C]` with taps on one axis).
fn diagonal_kernel(taps: &[f64], orientation: [usize; 2], channels: usize) -> Result<WeightTensor> {
    let [ka, kb] = orientation;
    assert_eq!(ka.max(kb), taps.len());
    let mut w = vec![0.0; ka * kb * channels * channels];
    for (i, &tap) in taps.iter().enumerate() {
        let (a, b) = if ka >= kb { (i, 0) } else { (0, i) };
        for c in 0..channels {
            w[((a * kb + b) * channels + c) * channels + c] = tap;
        }
    }
    WeightTensor::new(Tensor::from_vec(w, &[ka, kb, channels, channels])?)
}

/// Separable-kernel equivalence: a fully 1D-factorized block whose taps
/// form an outer-product kernel must match the rank-5 reference on that
/// kernel to [`TOL_COMPOSED`].
pub fn check_separable_equivalence(seed: u64, cases: usize) -> SuiteReport {
    let mut suite = SuiteBuilder::new("separable_equivalence");
    let mut rng = SplitMix64::new(seed);

    for case_idx in 0..cases {
        // First two cases pin the hand-checkable kernels: a pure center
        // tap (identity) and a temporal 3-tap box on a ones input.
        let (b, t_len, x_len, y_len, ch, d, tk);
        let (u, v, q): (Vec<f64>, Vec<f64>, Vec<f64>);
        let mut ones_input = false;
        let mut label = "";
        if case_idx < 2 {
            b = 1;
            t_len = 4;
            x_len = 5;
            y_len = 5;
            ch = 2;
            d = 3;
            tk = 3;
            u = vec![0.0, 1.0, 0.0];
            v = vec![0.0, 1.0, 0.0];
            if case_idx == 0 {
                label = " (center taps)";
                q = vec![0.0, 1.0, 0.0];
            } else {
                label = " (temporal box)";
                q = vec![1.0, 1.0, 1.0];
                ones_input = true;
            }
        } else {
            b = 1 + (rng.next_u64() % 2) as usize;
            t_len = 2 + (rng.next_u64() % 4) as usize;
            x_len = 4 + (rng.next_u64() % 5) as usize;
            y_len = 4 + (rng.next_u64() % 5) as usize;
            ch = 1 + (rng.next_u64() % 3) as usize;
            d = if rng.next_u64().is_multiple_of(2) { 1 } else { 3 };
            tk = if rng.next_u64().is_multiple_of(2) { 1 } else { 3 };
            u = (0..d).map(|_| rng.next_f64()).collect();
            v = (0..d).map(|_| rng.next_f64()).collect();
            q = (0..tk).map(|_| rng.next_f64()).collect();
        }

        let case = format!("case {case_idx}: [{b},{t_len},{x_len},{y_len},{ch}] d={d} t={tk}{label}");

        let run = (|| -> Result<(f64, Option<f64>)> {
            let vs = VideoShape::new(b, t_len, x_len, y_len, ch)?;
            let x = if ones_input {
                Tensor::from_vec(vec![1.0; vs.elements()], &vs.fold_frames())?
            } else {
                fill_random(&vs.fold_frames(), seed ^ (case_idx as u64) << 3)?
            };

            // Fully 1D block: horizontal v, vertical u, temporal q, each
            // with an identity channel map (requires Cin == S).
            let cfg = BlockConfig::new(BlockVariant::Rank1, ch, ch).with_kernels(d, tk);
            let block = Block::with_weights(
                cfg,
                vec![
                    diagonal_kernel(&v, [1, d], ch)?,
                    diagonal_kernel(&u, [d, 1], ch)?,
                    diagonal_kernel(&q, [tk, 1], ch)?,
                ],
            )?;
            let (out, out_vs) = block.forward(&x, vs)?;
            let out5 = out.reshape(&out_vs.dims())?;

            let kernel = outer_product_kernel(&q, &u, &v, ch)?;
            let reference = conv3d(&x.reshape(&vs.dims())?, &kernel, (1, 1, 1))?;

            let interior = if ones_input {
                Some(reference.get(&[0, 1, 2, 2, 0]))
            } else {
                None
            };
            Ok((relative_diff(&reference, &out5), interior))
        })();

        match run {
            Ok((diff, interior)) => {
                suite.diff_case(case.clone(), diff, TOL_COMPOSED);
                if let Some(value) = interior {
                    suite.bool_case(
                        format!("{case} interior box sum"),
                        value == 3.0,
                        Some(format!("interior value {value}")),
                    );
                }
            }
            Err(e) => suite.error_case(case, e),
        }
    }
    suite.finish()
}

/// Degenerate-kernel equivalences: a `[1,d,d]` kernel equals per-frame
/// 2D convolution on the batch-time fold, and a `[t,1,1]` kernel equals
/// the temporal convolution on the pixel fold, both to
/// [`TOL_SINGLE_FACTOR`].
pub fn check_spatial_only_equivalence(seed: u64, cases: usize) -> SuiteReport {
    let mut suite = SuiteBuilder::new("single_factor_equivalence");
    let mut rng = SplitMix64::new(seed ^ 0x5041);

    for case_idx in 0..cases {
        let b = 1 + (rng.next_u64() % 2) as usize;
        let t_len = 2 + (rng.next_u64() % 4) as usize;
        let x_len = 4 + (rng.next_u64() % 5) as usize;
        let y_len = 4 + (rng.next_u64() % 5) as usize;
        let cin = 1 + (rng.next_u64() % 3) as usize;
        let cout = 1 + (rng.next_u64() % 3) as usize;
        let vs = match VideoShape::new(b, t_len, x_len, y_len, cin) {
            Ok(vs) => vs,
            Err(e) => {
                suite.error_case(format!("case {case_idx}"), e);
                continue;
            }
        };

        // Spatial factor: [1,d,d] kernel vs conv2d on [B*T, X, Y, C].
        let spatial_case = format!("spatial case {case_idx}: {vs:?} -> {cout}ch");
        let spatial = (|| -> Result<f64> {
            let d = 3;
            let w2 = WeightTensor::random(&[d, d, cin, cout], &mut rng)?;
            let x = fill_random(&vs.fold_frames(), seed ^ 0x9 ^ (case_idx as u64) << 4)?;
            let folded = conv2d(&x, &w2, (1, 1))?;
            let candidate = folded.reshape(&[b, t_len, x_len, y_len, cout])?;
            let w5 = WeightTensor::new(w2.weights().reshape(&[1, d, d, cin, cout])?)?;
            let reference = conv3d(&x.reshape(&vs.dims())?, &w5, (1, 1, 1))?;
            Ok(relative_diff(&reference, &candidate))
        })();
        match spatial {
            Ok(diff) => suite.diff_case(spatial_case, diff, TOL_SINGLE_FACTOR),
            Err(e) => suite.error_case(spatial_case, e),
        }

        // Temporal factor: [t,1,1] kernel vs conv2d on [B, T, X*Y, C].
        let temporal_case = format!("temporal case {case_idx}: {vs:?} -> {cout}ch");
        let temporal = (|| -> Result<f64> {
            let tk = 3;
            let w1 = WeightTensor::random(&[tk, 1, cin, cout], &mut rng)?;
            let x = fill_random(&vs.fold_frames(), seed ^ 0xA ^ (case_idx as u64) << 4)?;
            let pixels = x.reshape(&vs.fold_pixels())?;
            let folded = conv2d(&pixels, &w1, (1, 1))?;
            let candidate = folded.reshape(&[b, t_len, x_len, y_len, cout])?;
            let w5 = WeightTensor::new(w1.weights().reshape(&[tk, 1, 1, cin, cout])?)?;
            let reference = conv3d(&x.reshape(&vs.dims())?, &w5, (1, 1, 1))?;
            Ok(relative_diff(&reference, &candidate))
        })();
        match temporal {
            Ok(diff) => suite.diff_case(temporal_case, diff, TOL_SINGLE_FACTOR),
            Err(e) => suite.error_case(temporal_case, e),
        }
    }

    // Hand-checkable anchor: 3×3 ones kernel on a ones frame has
    // interior value 9 through both paths.
    let anchor = (|| -> Result<bool> {
        let vs = VideoShape::new(1, 2, 5, 5, 1)?;
        let x = Tensor::from_vec(vec![1.0; vs.elements()], &vs.fold_frames())?;
        let w2 = WeightTensor::new(Tensor::from_vec(vec![1.0; 9], &[3, 3, 1, 1])?)?;
        let folded = conv2d(&x, &w2, (1, 1))?;
        let w5 = WeightTensor::new(w2.weights().reshape(&[1, 3, 3, 1, 1])?)?;
        let reference = conv3d(&x.reshape(&vs.dims())?, &w5, (1, 1, 1))?;
        Ok(folded.get(&[0, 2, 2, 0]) == 9.0 && reference.get(&[0, 0, 2, 2, 0]) == 9.0)
    })();
    match anchor {
        Ok(passed) => suite.bool_case("ones interior 9".into(), passed, None),
        Err(e) => suite.error_case("ones interior 9".into(), e),
    }

    suite.finish()
}

/// Executes a forward pass with a counting hook on every multiply and
/// returns the number of multiplies performed. The input is generated
/// from the block's seed, so the count depends only on geometry.
pub fn count_macs_instrumented(block: &Block, vs: VideoShape) -> Result<u64> {
    let x = fill_random(&vs.fold_frames(), block.config().seed ^ 0x3C0)?;
    let (result, macs) = with_mac_count(|| block.forward(&x, vs));
    result?;
    Ok(macs)
}

/// Cost-model validation: twice the instrumented multiply count equals
/// the analytic FLOP count for every variant, and the parallel-add /
/// rank-5 multiply ratio is exactly 12/27 at unit stride with equal
/// channels.
pub fn check_mac_model(seed: u64) -> SuiteReport {
    let mut suite = SuiteBuilder::new("mac_model");
    let vs = VideoShape::new(1, 2, 4, 4, 2).unwrap();
    for variant in BlockVariant::ALL {
        for stride in [1usize, 2] {
            let case = format!("{variant} s={stride}");
            let cfg = BlockConfig::new(variant, vs.channels, 3)
                .with_stride(stride)
                .with_seed(seed);
            let run = (|| -> Result<(u64, u64)> {
                let block = Block::build(cfg.clone())?;
                let macs = count_macs_instrumented(&block, vs)?;
                Ok((2 * macs, flops_count(&cfg, vs)?))
            })();
            match run {
                Ok((doubled, analytic)) => suite.bool_case(
                    case,
                    doubled == analytic,
                    Some(format!("2*macs={doubled}, analytic={analytic}")),
                ),
                Err(e) => suite.error_case(case, e),
            }
        }
    }

    let ratio_case = "proposed-add / conv3d multiply ratio 12/27".to_string();
    let run = (|| -> Result<(u64, u64)> {
        let vs = VideoShape::new(1, 2, 4, 4, 3)?;
        let add = Block::build(
            BlockConfig::new(BlockVariant::ProposedAdd, 3, 3).with_seed(seed),
        )?;
        let full = Block::build(BlockConfig::new(BlockVariant::Conv3d, 3, 3).with_seed(seed))?;
        Ok((
            count_macs_instrumented(&add, vs)?,
            count_macs_instrumented(&full, vs)?,
        ))
    })();
    match run {
        Ok((add, full)) => suite.bool_case(
            ratio_case,
            add * 27 == full * 12,
            Some(format!("add={add}, conv3d={full}")),
        ),
        Err(e) => suite.error_case(ratio_case, e),
    }

    let single = "conv3d single position, unit channels -> 27 multiplies".to_string();
    let run = (|| -> Result<u64> {
        let vs = VideoShape::new(1, 1, 1, 1, 1)?;
        let block = Block::build(BlockConfig::new(BlockVariant::Conv3d, 1, 1).with_seed(seed))?;
        count_macs_instrumented(&block, vs)
    })();
    match run {
        Ok(macs) => suite.bool_case(single, macs == 27, Some(format!("macs={macs}"))),
        Err(e) => suite.error_case(single, e),
    }

    suite.finish()
}

/// Determinism: repeated forward passes and 1/2/8-thread pools produce
/// bit-identical outputs; each case records a digest of the output bits
/// so independent processes can be compared.
pub fn check_determinism(seed: u64) -> SuiteReport {
    let mut suite = SuiteBuilder::new("determinism");
    let vs = VideoShape::new(1, 4, 6, 6, 3).unwrap();
    for variant in BlockVariant::ALL {
        let case = format!("{variant} repeat + thread sweep");
        let run = (|| -> Result<(bool, String)> {
            let cfg = BlockConfig::new(variant, vs.channels, 4).with_seed(seed);
            let block = Block::build(cfg)?;
            let x = fill_random(&vs.fold_frames(), seed ^ 0xD37)?;
            let (first, _) = block.forward(&x, vs)?;
            let (second, _) = block.forward(&x, vs)?;
            let mut equal = first.bit_eq(&second);
            for threads in [1usize, 2, 8] {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| crate::error::Error::invalid("thread pool", e.to_string()))?;
                let (pooled, _) = pool.install(|| block.forward(&x, vs))?;
                equal &= first.bit_eq(&pooled);
            }
            Ok((equal, tensor_digest(&first)))
        })();
        match run {
            Ok((passed, digest)) => suite.cases.push(CaseResult {
                suite: suite.name.clone(),
                case,
                passed,
                max_rel_diff: 0.0,
                tolerance: 0.0,
                note: None,
                output_digest: Some(digest),
            }),
            Err(e) => suite.error_case(case, e),
        }
    }
    suite.finish()
}

/// Runs every suite at its default sizing.
pub fn run_all_suites(seed: u64) -> Vec<SuiteReport> {
    let grid = default_shape_grid();
    vec![
        check_shape_contracts(&grid, seed),
        check_rank_ceiling(seed),
        check_zero_branch(&grid, seed),
        check_separable_equivalence(seed, 56),
        check_spatial_only_equivalence(seed, 24),
        check_mac_model(seed),
        check_determinism(seed),
    ]
}

/// One JSON object per case, one case per line.
pub fn write_jsonl<W: Write>(reports: &[SuiteReport], mut out: W) -> std::io::Result<()> {
    for report in reports {
        for case in &report.cases {
            serde_json::to_writer(&mut out, case)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
