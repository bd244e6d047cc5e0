//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`).

use std::time::Instant;

use flatconv::bench::{bench_variants, BenchOptions};
use flatconv::block::{flops_count, Block, BlockConfig, BlockVariant};
use flatconv::net::{Eco3dNet, NetPlan, NetSpec};
use flatconv::tensor::{fill_random, track_max_rank, VideoShape};
use flatconv::verify;

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[{}] {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

#[test]
fn criterion_1_parameter_delta_add_variant() {
    let started = Instant::now();
    let conv = NetPlan::build(BlockVariant::Conv3d, &NetSpec::default())
        .unwrap()
        .param_count() as f64;
    let add = NetPlan::build(BlockVariant::ProposedAdd, &NetSpec::default())
        .unwrap()
        .param_count() as f64;
    let elapsed = started.elapsed();

    let delta = conv - add;
    let target = 17.4e6;
    let within = (delta - target).abs() <= 0.05 * target;
    let fast = elapsed.as_secs_f64() < 1.0;
    report(
        "criterion 1 (conv3d - proposed-add parameters)",
        within && fast,
        &format!(
            "delta {:.4}M vs {:.1}M +-5%, counted in {:.1} ms",
            delta / 1e6,
            target / 1e6,
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

#[test]
fn criterion_2_parameter_delta_cat_variant() {
    let conv = NetPlan::build(BlockVariant::Conv3d, &NetSpec::default())
        .unwrap()
        .param_count() as f64;
    let cat = NetPlan::build(BlockVariant::ProposedCat, &NetSpec::default())
        .unwrap()
        .param_count() as f64;
    let delta = conv - cat;
    let within = (delta - 1.5e6).abs() <= 0.6e6;
    report(
        "criterion 2 (conv3d - proposed-cat parameters)",
        within,
        &format!("delta {:.4}M vs 1.5M +-0.6M", delta / 1e6),
    );
}

#[test]
fn criterion_3_r2plus1d_parameter_preservation() {
    let channels = [96usize, 128, 256, 512];
    let (d, t) = (3usize, 3usize);
    let mut worst: i64 = 0;
    let mut all_within = true;
    for cin in channels {
        for s in channels {
            let factorized = Block::build(BlockConfig::new(BlockVariant::R2Plus1d, cin, s))
                .unwrap()
                .param_count() as i64;
            let full = Block::build(BlockConfig::new(BlockVariant::Conv3d, cin, s))
                .unwrap()
                .param_count() as i64;
            let deficit = (full - factorized).abs();
            let bound = (d * d * cin + t * s) as i64;
            worst = worst.max(deficit);
            all_within &= deficit < bound;
        }
    }
    report(
        "criterion 3 (r2plus1d parameter preservation)",
        all_within,
        &format!("worst |deficit| {worst} over 16 channel pairs, each under its floor bound"),
    );
}

#[test]
fn criterion_4_flop_ratio() {
    // Exact 12/27 at unit stride with equal channels, via both the
    // analytic model and the instrumented multiply counter.
    let mut exact = true;
    for (vs, ch) in [
        (VideoShape::new(1, 4, 6, 6, 8).unwrap(), 8usize),
        (VideoShape::new(2, 2, 4, 10, 3).unwrap(), 3),
    ] {
        let add_cfg = BlockConfig::new(BlockVariant::ProposedAdd, ch, ch);
        let full_cfg = BlockConfig::new(BlockVariant::Conv3d, ch, ch);
        let add_flops = flops_count(&add_cfg, vs).unwrap();
        let full_flops = flops_count(&full_cfg, vs).unwrap();
        exact &= add_flops * 27 == full_flops * 12;

        let add_macs =
            verify::count_macs_instrumented(&Block::build(add_cfg.clone()).unwrap(), vs).unwrap();
        let full_macs =
            verify::count_macs_instrumented(&Block::build(full_cfg.clone()).unwrap(), vs).unwrap();
        exact &= 2 * add_macs == add_flops;
        exact &= 2 * full_macs == full_flops;
        exact &= add_macs * 27 == full_macs * 12;
    }

    // Whole-network ratio at the reference geometry.
    let spec = NetSpec::default();
    let add = NetPlan::build(BlockVariant::ProposedAdd, &spec)
        .unwrap()
        .flops_count(1)
        .unwrap() as f64;
    let full = NetPlan::build(BlockVariant::Conv3d, &spec)
        .unwrap()
        .flops_count(1)
        .unwrap() as f64;
    let ratio = add / full;
    let ratio_ok = (ratio - 0.480).abs() <= 0.05;

    report(
        "criterion 4 (FLOP ratios)",
        exact && ratio_ok,
        &format!("block ratio exactly 12/27: {exact}; network ratio {ratio:.4} vs 0.480 +-0.05"),
    );
}

#[test]
fn criterion_5_oracle_equivalences() {
    let started = Instant::now();
    let seed = 7;

    let separable = verify::check_separable_equivalence(seed, 56);
    let single_factor = verify::check_spatial_only_equivalence(seed, 24);
    let zero_branch = verify::check_zero_branch(&verify::default_shape_grid(), seed);
    let elapsed = started.elapsed().as_secs_f64();

    let passed = separable.passed()
        && separable.cases_run() >= 50
        && single_factor.passed()
        && zero_branch.passed()
        && elapsed < 60.0;
    report(
        "criterion 5 (oracle equivalences)",
        passed,
        &format!(
            "separable {} cases <=1e-8, single-factor {} cases <=1e-10, zero-branch {} cases bit-exact, {:.1} s",
            separable.cases_run(),
            single_factor.cases_run(),
            zero_branch.cases_run(),
            elapsed
        ),
    );
}

#[test]
fn criterion_6_rank_ceiling_over_full_networks() {
    let spec = NetSpec {
        frames: 4,
        input_width: 8,
        input_height: 8,
        input_channels: 6,
        stage_channels: [8, 12, 16],
        classes: 5,
        seed: 42,
        ..NetSpec::default()
    };
    let mut all_exact = true;
    let mut detail = String::new();
    for variant in BlockVariant::ALL {
        let net = Eco3dNet::build(variant, &spec).unwrap();
        let vs = spec.input_shape(1).unwrap();
        let x = fill_random(&vs.fold_frames(), 43).unwrap();
        let (result, max_rank) = track_max_rank(|| net.forward(&x, vs));
        result.unwrap();
        let expected = if variant == BlockVariant::Conv3d { 5 } else { 4 };
        all_exact &= max_rank == expected;
        detail.push_str(&format!("{variant}={max_rank} "));
    }
    report(
        "criterion 6 (rank ceiling over full networks)",
        all_exact,
        &format!("max ranks: {}(conv3d expects 5, others exactly 4)", detail),
    );
}

#[test]
fn criterion_7_shape_contracts() {
    let grid = verify::default_shape_grid();
    let report_shapes = verify::check_shape_contracts(&grid, 7);
    let expected_cases = grid.len() * BlockVariant::ALL.len() * 2;
    let passed = report_shapes.passed() && report_shapes.cases_run() == expected_cases;
    report(
        "criterion 7 (shape contracts)",
        passed,
        &format!(
            "{} cases over {} shapes x 8 variants x s in {{1,2}}, branch shapes equal before fusion",
            report_shapes.cases_run(),
            grid.len()
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let in_process = verify::check_determinism(123);

    // Two separate processes with the same seed must emit identical
    // per-case reports, including the output digests.
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("determinism-{run}.jsonl"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_flatconv"))
            .args(["verify", "--suite", "determinism", "--seed", "123", "--out"])
            .arg(&path)
            .status()
            .expect("spawn flatconv");
        assert!(status.success(), "verify subprocess failed");
        outputs.push(std::fs::read(&path).unwrap());
    }

    let passed = in_process.passed() && outputs[0] == outputs[1];
    report(
        "criterion 8 (determinism)",
        passed,
        &format!(
            "{} in-process cases bit-identical across 1/2/8 workers; two process runs emitted identical reports ({} bytes)",
            in_process.cases_run(),
            outputs[0].len()
        ),
    );
}

#[test]
fn criterion_9_benchmark_sanity() {
    let started = Instant::now();
    let vs = VideoShape::new(1, 16, 28, 28, 96).unwrap();
    let opts = BenchOptions {
        reps: 20,
        warmup: 3,
        ..BenchOptions::default()
    };
    let records = bench_variants(&BlockVariant::ALL, vs, &opts).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let flops_of = |name: &str| {
        records
            .iter()
            .find(|r| r.variant == name)
            .map(|r| r.flops)
            .unwrap()
    };
    let add = flops_of("proposed-add");
    let p3d_a = flops_of("p3d-a");
    let conv = flops_of("conv3d");
    let ordered = add < p3d_a && p3d_a < conv;
    let in_time = elapsed < 300.0;

    report(
        "criterion 9 (benchmark sanity)",
        ordered && in_time,
        &format!(
            "8 variants x 20 reps at [1,16,28,28,96] in {elapsed:.1} s (< 300 s); flops {add} < {p3d_a} < {conv}"
        ),
    );
}
