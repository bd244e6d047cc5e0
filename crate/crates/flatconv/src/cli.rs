//! Command-line front end: `verify` runs the equivalence and property
//! suites, `count` prints the whole-network parameter/FLOP comparison,
//! `bench` times forward passes, and `table` reformats benchmark CSV.
//!
//! Exit codes: 0 success, 1 verification/benchmark failure, 2 usage
//! error. `FLATCONV_SEED` overrides the default seed when no `--seed`
//! flag is given.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{
    bench_variants, emit_table, parse_csv, write_atomic, BenchOptions, RunConfig, TableFormat,
};
use crate::block::BlockVariant;
use crate::net::{cost_table, CostRow, NetSpec};
use crate::tensor::VideoShape;
use crate::verify::{self, SuiteReport};

const DEFAULT_SEED: u64 = 7;
const SEED_ENV: &str = "FLATCONV_SEED";

#[derive(Parser)]
#[command(
    name = "flatconv",
    version,
    about = "3D-convolution blocks on rank-4 tensors: verification, cost model, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteFilter {
    All,
    /// The three oracle-equivalence suites.
    Equivalence,
    Shapes,
    Rank,
    ZeroBranch,
    Separable,
    SingleFactor,
    Mac,
    Determinism,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Md,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> TableFormat {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Md => TableFormat::Markdown,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and exit 0 only if every case passes.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteFilter::All)]
        suite: SuiteFilter,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-case report as JSON lines to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-variant parameter and FLOP table for the 3D tail.
    Count {
        #[arg(long, default_value = "eco-lite")]
        net: String,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = 400)]
        classes: usize,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Time forward passes of selected blocks at one input shape.
    Bench {
        /// Comma-separated variant names, or "all".
        #[arg(long, default_value = "all")]
        block: String,
        /// Logical input shape B,T,X,Y,C.
        #[arg(long)]
        shape: Option<String>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        reps: Option<u64>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_channels: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        /// Write the records as CSV (atomically) to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// JSON file with defaults for the flags above; flags win.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Reformat a benchmark CSV file.
    Table {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses arguments from the process environment and runs the selected
/// command, returning the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn execute(command: Command) -> CmdResult {
    match command {
        Command::Verify { suite, seed, out } => cmd_verify(suite, seed, out.as_deref()),
        Command::Count {
            net,
            frames,
            classes,
            batch,
            format,
        } => cmd_count(&net, frames, classes, batch, format),
        Command::Bench {
            block,
            shape,
            reps,
            warmup,
            threads,
            seed,
            out_channels,
            stride,
            out,
            format,
            config,
        } => {
            let file = match config {
                Some(path) => RunConfig::load(&path)
                    .map_err(|e| Failure::Usage(e.to_string()))?,
                None => RunConfig::default(),
            };
            cmd_bench(BenchArgs {
                block,
                shape,
                reps,
                warmup,
                threads,
                seed,
                out_channels,
                stride,
                out,
                format,
                file,
            })
        }
        Command::Table { input, format } => cmd_table(&input, format),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={text:?} is not a valid seed"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn cmd_verify(filter: SuiteFilter, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let seed = resolve_seed(seed)?;
    let grid = verify::default_shape_grid();
    let reports: Vec<SuiteReport> = match filter {
        SuiteFilter::All => verify::run_all_suites(seed),
        SuiteFilter::Equivalence => vec![
            verify::check_zero_branch(&grid, seed),
            verify::check_separable_equivalence(seed, 56),
            verify::check_spatial_only_equivalence(seed, 24),
        ],
        SuiteFilter::Shapes => vec![verify::check_shape_contracts(&grid, seed)],
        SuiteFilter::Rank => vec![verify::check_rank_ceiling(seed)],
        SuiteFilter::ZeroBranch => vec![verify::check_zero_branch(&grid, seed)],
        SuiteFilter::Separable => vec![verify::check_separable_equivalence(seed, 56)],
        SuiteFilter::SingleFactor => vec![verify::check_spatial_only_equivalence(seed, 24)],
        SuiteFilter::Mac => vec![verify::check_mac_model(seed)],
        SuiteFilter::Determinism => vec![verify::check_determinism(seed)],
    };

    let mut all_passed = true;
    for report in &reports {
        let failures = report.failures().count();
        all_passed &= report.passed();
        println!(
            "[{}] {}: {} cases, {} failed ({:.1} ms)",
            if report.passed() { "PASS" } else { "FAIL" },
            report.suite,
            report.cases_run(),
            failures,
            report.wall_ms
        );
        for case in report.failures() {
            println!(
                "       {}: diff {:.3e} tol {:.1e}{}",
                case.case,
                case.max_rel_diff,
                case.tolerance,
                case.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
    }

    if let Some(path) = out {
        let mut buf = Vec::new();
        verify::write_jsonl(&reports, &mut buf).map_err(crate::error::Error::from)?;
        write_atomic(path, &String::from_utf8_lossy(&buf))?;
        println!("report written to {}", path.display());
    }

    Ok(if all_passed { 0 } else { 1 })
}

fn cost_fields(row: &CostRow) -> Vec<String> {
    vec![
        row.variant.name().to_string(),
        row.params.to_string(),
        row.delta_params.to_string(),
        row.flops.to_string(),
        row.delta_flops.to_string(),
    ]
}

fn cmd_count(net: &str, frames: usize, classes: usize, batch: usize, format: Format) -> CmdResult {
    if net != "eco-lite" {
        return Err(Failure::Usage(format!(
            "unknown net {net:?}; only \"eco-lite\" is available"
        )));
    }
    if batch == 0 {
        return Err(Failure::Usage("batch must be at least 1".into()));
    }
    let spec = NetSpec {
        frames,
        classes,
        ..NetSpec::default()
    };
    let rows = cost_table(&spec, batch).map_err(|e| Failure::Usage(e.to_string()))?;

    const COLUMNS: [&str; 5] = [
        "method",
        "params",
        "delta_params_vs_conv3d",
        "flops",
        "delta_flops_vs_conv3d",
    ];
    match format {
        Format::Csv => {
            println!("{}", COLUMNS.join(","));
            for row in &rows {
                println!("{}", cost_fields(row).join(","));
            }
        }
        Format::Md => {
            println!("| {} |", COLUMNS.join(" | "));
            println!("|{}", " --- |".repeat(COLUMNS.len()));
            for row in &rows {
                println!("| {} |", cost_fields(row).join(" | "));
            }
        }
    }
    Ok(0)
}

struct BenchArgs {
    block: String,
    shape: Option<String>,
    reps: Option<u64>,
    warmup: Option<usize>,
    threads: Option<usize>,
    seed: Option<u64>,
    out_channels: Option<usize>,
    stride: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    file: RunConfig,
}

fn parse_shape(text: &str) -> Result<VideoShape, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 5 {
        return Err(Failure::Usage(format!(
            "shape must be B,T,X,Y,C; got {text:?}"
        )));
    }
    let mut dims = [0usize; 5];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid shape component {part:?}")))?;
    }
    VideoShape::new(dims[0], dims[1], dims[2], dims[3], dims[4])
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_variants(text: &str) -> Result<Vec<BlockVariant>, Failure> {
    if text == "all" {
        return Ok(BlockVariant::ALL.to_vec());
    }
    text.split(',')
        .map(|name| {
            BlockVariant::from_name(name.trim()).ok_or_else(|| {
                let known: Vec<&str> = BlockVariant::ALL.iter().map(|v| v.name()).collect();
                Failure::Usage(format!(
                    "unknown block {name:?}; expected one of {} or \"all\"",
                    known.join(", ")
                ))
            })
        })
        .collect()
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    // Flags override config-file values, which override defaults.
    let file = &args.file;
    let variants = match (&args.block[..], &file.variants) {
        ("all", Some(named)) => parse_variants(&named.join(","))?,
        (block, _) => parse_variants(block)?,
    };
    let shape_text = args.shape.clone().or_else(|| {
        file.shape
            .map(|[b, t, x, y, c]| format!("{b},{t},{x},{y},{c}"))
    });
    let vs = match shape_text {
        Some(text) => parse_shape(&text)?,
        None => VideoShape::new(1, 16, 28, 28, 96).expect("default shape"),
    };
    let reps = args.reps.map(|r| r as usize).or(file.reps).unwrap_or(20);
    if reps == 0 {
        return Err(Failure::Usage("reps must be at least 1".into()));
    }
    let seed = match args.seed.or(file.seed) {
        Some(seed) => seed,
        None => resolve_seed(None)?,
    };
    let opts = BenchOptions {
        out_channels: args.out_channels.or(file.out_channels).unwrap_or(128),
        stride: args.stride.or(file.stride).unwrap_or(1),
        reps,
        warmup: args.warmup.or(file.warmup).unwrap_or(3),
        threads: args.threads.or(file.threads).unwrap_or(0),
        seed,
        ..BenchOptions::default()
    };
    if opts.stride == 0 {
        return Err(Failure::Usage("stride must be at least 1".into()));
    }
    vs.strided(opts.stride, opts.out_channels)
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let format: TableFormat = args
        .format
        .map(TableFormat::from)
        .or_else(|| file.format.as_deref().and_then(TableFormat::from_name))
        .unwrap_or(TableFormat::Csv);
    let out_path = args.out.or_else(|| file.out.clone().map(PathBuf::from));

    let records = bench_variants(&variants, vs, &opts)?;
    print!("{}", emit_table(&records, format));
    if let Some(path) = out_path {
        write_atomic(&path, &emit_table(&records, format))?;
        eprintln!("records written to {}", path.display());
    }
    Ok(0)
}

fn cmd_table(input: &Path, format: Format) -> CmdResult {
    let text = std::fs::read_to_string(input).map_err(crate::error::Error::from)?;
    let records = parse_csv(&text)?;
    print!("{}", emit_table(&records, format.into()));
    Ok(0)
}
