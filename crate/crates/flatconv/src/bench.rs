//! Wall-clock forward-pass benchmark harness with warmup, repeated
//! timed runs over a monotonic clock, and CSV/Markdown emission.
//!
//! Parameter and FLOP columns are analytic and fully deterministic; only
//! the latency columns vary run to run. Throughput is reported as clip
//! frames per second (`B·T·reps / elapsed`); absolute numbers are
//! hardware-dependent and only orderings and ratios are meaningful.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::block::{Block, BlockConfig, BlockVariant};
use crate::error::{Error, Result};
use crate::tensor::{fill_random, VideoShape};

/// Measured and derived quantities for one variant at one input shape.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub variant: String,
    pub shape: [usize; 5],
    pub params: u64,
    pub flops: u64,
    pub reps: usize,
    pub warmup: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub throughput_fps: f64,
}

/// Harness options; see the CLI for the matching flags.
#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub out_channels: usize,
    pub stride: usize,
    pub spatial_kernel: usize,
    pub temporal_kernel: usize,
    pub reps: usize,
    pub warmup: usize,
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            out_channels: 128,
            stride: 1,
            spatial_kernel: 3,
            temporal_kernel: 3,
            reps: 20,
            warmup: 3,
            threads: 0,
            seed: 7,
        }
    }
}

/// Benchmark configuration as read from a JSON file; any present field
/// seeds the corresponding option or CLI value, and explicit flags win.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub variants: Option<Vec<String>>,
    pub shape: Option<[usize; 5]>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub warmup: Option<usize>,
    pub threads: Option<usize>,
    pub out_channels: Option<usize>,
    pub stride: Option<usize>,
    pub out: Option<String>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid("config file", format!("{}: {e}", path.display())))
    }
}

/// Times `opts.reps` forward passes of one variant after `opts.warmup`
/// untimed runs. Input allocation happens before the clock starts.
pub fn bench_block(variant: BlockVariant, vs: VideoShape, opts: &BenchOptions) -> Result<BenchRecord> {
    if opts.reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    let cfg = BlockConfig::new(variant, vs.channels, opts.out_channels)
        .with_kernels(opts.spatial_kernel, opts.temporal_kernel)
        .with_stride(opts.stride)
        .with_seed(opts.seed);
    let block = Block::build(cfg.clone())?;
    let x = fill_random(&vs.fold_frames(), opts.seed ^ 0xB1E5)?;
    block.output_shape(vs)?;

    let run = || -> Result<Vec<f64>> {
        for _ in 0..opts.warmup {
            block.forward(&x, vs)?;
        }
        let mut samples = Vec::with_capacity(opts.reps);
        for _ in 0..opts.reps {
            let started = std::time::Instant::now();
            block.forward(&x, vs)?;
            samples.push(started.elapsed().as_secs_f64() * 1e3);
        }
        Ok(samples)
    };

    let samples = if opts.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
        pool.install(run)?
    } else {
        run()?
    };

    let total_ms: f64 = samples.iter().sum();
    let mean = total_ms / samples.len() as f64;
    let std = if samples.len() > 1 {
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (samples.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    let frames = (vs.batch * vs.frames * opts.reps) as f64;

    Ok(BenchRecord {
        variant: variant.name().to_string(),
        shape: vs.dims(),
        params: block.param_count() as u64,
        flops: block.flops_count(vs)?,
        reps: opts.reps,
        warmup: opts.warmup,
        mean_ms: mean,
        std_ms: std,
        throughput_fps: frames / (total_ms / 1e3),
    })
}

/// Benchmarks each variant in order at one shape.
pub fn bench_variants(
    variants: &[BlockVariant],
    vs: VideoShape,
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>> {
    variants.iter().map(|&v| bench_block(v, vs, opts)).collect()
}

/// Canonical CSV header.
pub const CSV_HEADER: &str = "variant,B,T,X,Y,C,params,flops,reps,mean_ms,std_ms,throughput_fps";

/// Formats to `digits` significant digits in plain decimal.
pub fn format_significant(value: f64, digits: u32) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    if decimals == 0 {
        // Integer part already carries all significant digits; round off
        // anything beyond them.
        let scale = 10f64.powi(magnitude - digits as i32 + 1);
        format!("{:.0}", (value / scale).round() * scale)
    } else {
        format!("{value:.decimals$}")
    }
}

fn record_fields(record: &BenchRecord) -> Vec<String> {
    let [b, t, x, y, c] = record.shape;
    vec![
        record.variant.clone(),
        b.to_string(),
        t.to_string(),
        x.to_string(),
        y.to_string(),
        c.to_string(),
        record.params.to_string(),
        record.flops.to_string(),
        record.reps.to_string(),
        format_significant(record.mean_ms, 6),
        format_significant(record.std_ms, 6),
        format_significant(record.throughput_fps, 6),
    ]
}

/// Records as CSV with the canonical header, one row per record.
pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record_fields(record).join(","));
        out.push('\n');
    }
    out
}

/// Records as a pipe-delimited Markdown table mirroring the CSV columns.
pub fn emit_markdown(records: &[BenchRecord]) -> String {
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut out = format!("| {} |\n", columns.join(" | "));
    out.push_str(&format!("|{}\n", " --- |".repeat(columns.len())));
    for record in records {
        out.push_str(&format!("| {} |\n", record_fields(record).join(" | ")));
    }
    out
}

pub fn emit_table(records: &[BenchRecord], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(records),
        TableFormat::Markdown => emit_markdown(records),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl TableFormat {
    pub fn from_name(name: &str) -> Option<TableFormat> {
        match name {
            "csv" => Some(TableFormat::Csv),
            "md" | "markdown" => Some(TableFormat::Markdown),
            _ => None,
        }
    }
}

/// Parses rows produced by [`emit_csv`]; the header must match
/// [`CSV_HEADER`] exactly.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim_end() == CSV_HEADER => {}
        other => {
            return Err(Error::invalid(
                "csv",
                format!("expected header {CSV_HEADER:?}, got {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::invalid(
                "csv",
                format!("row {}: expected 12 fields, got {}", idx + 2, fields.len()),
            ));
        }
        let parse_err =
            |what: &'static str| move |e: std::num::ParseIntError| Error::invalid(what, e.to_string());
        let parse_f = |what: &'static str| {
            move |e: std::num::ParseFloatError| Error::invalid(what, e.to_string())
        };
        records.push(BenchRecord {
            variant: fields[0].to_string(),
            shape: [
                fields[1].parse().map_err(parse_err("B"))?,
                fields[2].parse().map_err(parse_err("T"))?,
                fields[3].parse().map_err(parse_err("X"))?,
                fields[4].parse().map_err(parse_err("Y"))?,
                fields[5].parse().map_err(parse_err("C"))?,
            ],
            params: fields[6].parse().map_err(parse_err("params"))?,
            flops: fields[7].parse().map_err(parse_err("flops"))?,
            reps: fields[8].parse().map_err(parse_err("reps"))?,
            warmup: 0,
            mean_ms: fields[9].parse().map_err(parse_f("mean_ms"))?,
            std_ms: fields[10].parse().map_err(parse_f("std_ms"))?,
            throughput_fps: fields[11].parse().map_err(parse_f("throughput_fps"))?,
        });
    }
    Ok(records)
}

/// Writes via a temporary file in the target directory plus an atomic
/// rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut file = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    file.write_all(contents.as_bytes())?;
    file.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(variant: &str, flops: u64) -> BenchRecord {
        BenchRecord {
            variant: variant.to_string(),
            shape: [1, 2, 4, 4, 2],
            params: 100,
            flops,
            reps: 2,
            warmup: 1,
            mean_ms: 1.234567,
            std_ms: 0.000123456,
            throughput_fps: 123456.789,
        }
    }

    #[test]
    fn csv_header_is_pinned() {
        let csv = emit_csv(&[]);
        assert_eq!(
            csv,
            "variant,B,T,X,Y,C,params,flops,reps,mean_ms,std_ms,throughput_fps\n"
        );
    }

    #[test]
    fn csv_rows_preserve_input_order() {
        let csv = emit_csv(&[record("a", 1), record("b", 2)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("a,"));
        assert!(lines[2].starts_with("b,"));
    }

    #[test]
    fn markdown_has_separator_row() {
        let md = emit_markdown(&[record("a", 1)]);
        let lines: Vec<&str> = md.lines().collect();
        assert!(lines[0].starts_with("| variant |"));
        assert!(lines[1].contains("---"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_significant(1.234567, 6), "1.23457");
        assert_eq!(format_significant(0.000123456789, 6), "0.000123457");
        assert_eq!(format_significant(123456789.0, 6), "123457000");
        assert_eq!(format_significant(0.0, 6), "0");
    }

    #[test]
    fn csv_roundtrips_through_parse() {
        let records = vec![record("conv3d", 54), record("proposed-add", 24)];
        let parsed = parse_csv(&emit_csv(&records)).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].variant, "conv3d");
        assert_eq!(parsed[1].flops, 24);
    }

    #[test]
    fn bench_produces_sane_record() {
        let vs = VideoShape::new(1, 2, 6, 6, 3).unwrap();
        let opts = BenchOptions {
            reps: 3,
            warmup: 1,
            ..BenchOptions::default()
        };
        let rec = bench_block(BlockVariant::ProposedAdd, vs, &opts).unwrap();
        assert_eq!(rec.reps, 3);
        assert!(rec.throughput_fps > 0.0);
        assert!(rec.std_ms >= 0.0);
        assert_eq!(rec.params, 3 * 3 * 3 * 128 + 3 * 3 * 128);
    }

    #[test]
    fn analytic_columns_are_run_independent() {
        let vs = VideoShape::new(1, 2, 6, 6, 3).unwrap();
        let opts = BenchOptions {
            reps: 2,
            warmup: 0,
            ..BenchOptions::default()
        };
        let a = bench_block(BlockVariant::Rank1, vs, &opts).unwrap();
        let b = bench_block(BlockVariant::Rank1, vs, &opts).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.flops, b.flops);
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "hello\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "hello\n");
    }

    #[test]
    fn run_config_rejects_unknown_fields() {
        let ok: RunConfig = serde_json::from_str(r#"{"reps": 5}"#).unwrap();
        assert_eq!(ok.reps, Some(5));
        assert!(serde_json::from_str::<RunConfig>(r#"{"repz": 5}"#).is_err());
    }
}
