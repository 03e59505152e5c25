//! `vfiqa` command-line driver.
//!
//! Exit codes: 0 success, 1 computation failure, 2 bad arguments or
//! configuration, 3 input/output failure (missing or malformed files).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vfiqa::estimate::EstimatorConfig;
use vfiqa::manifest::{correlate, read_manifest, write_table_csv, write_table_json, CorrelateOptions};
use vfiqa::media::open_video;
use vfiqa::pipeline::{benchmark, parse_metric_list, score_streams, FlowSource, MetricConfig};
use vfiqa::report::{write_csv, write_json};
use vfiqa::spatial::VmConfig;
use vfiqa::Error;

#[derive(Parser)]
#[command(name = "vfiqa", version, about = "Motion-field quality metrics for frame-interpolated video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a distorted sequence against its reference.
    Compute(ComputeArgs),
    /// Correlate metric scores with DMOS over a manifest.
    Correlate(CorrelateArgs),
    /// Time motion estimation and metric calculation per frame.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ScoringArgs {
    /// Width of raw YUV input (y4m carries its own).
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// `builtin` or `dir:<path>` with ref/NNNNNN.flo and dis/NNNNNN.flo.
    #[arg(long, default_value = "builtin")]
    flow: String,
    /// Vector-median patch size (odd, >= 3).
    #[arg(long = "vm-n", default_value_t = 3)]
    vm_n: usize,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 9)]
    block: usize,
    #[arg(long, default_value_t = 4)]
    radius: usize,
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    /// Worker threads.
    #[arg(long, env = "VFIQA_THREADS")]
    threads: Option<usize>,
}

impl ScoringArgs {
    fn dims(&self) -> Result<Option<(usize, usize)>, Error> {
        match (self.width, self.height) {
            (Some(w), Some(h)) => Ok(Some((w, h))),
            (None, None) => Ok(None),
            _ => Err(Error::InvalidArgument("--width and --height must be given together".into())),
        }
    }

    fn config(&self, metrics: &str) -> Result<MetricConfig, Error> {
        let estimator = EstimatorConfig {
            pyramid_levels: self.levels,
            block_size: self.block,
            search_radius: self.radius,
            smoothing_weight: self.smoothing,
        };
        let cfg = MetricConfig {
            metrics: parse_metric_list(metrics)?,
            flow: FlowSource::parse(&self.flow, estimator)?,
            vm: VmConfig::new(self.vm_n)?,
            threads: self.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

const ALL_METRICS: &str =
    "div,epe,psnr,psnr-div,psnr-epe,psnr-ts,sdis-sref,ssim,ssim-div,ssim-epe,ssim-ts,ts,vm-epe";

#[derive(Args)]
struct ComputeArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long = "dis")]
    distorted: PathBuf,
    /// Comma-separated metric identifiers.
    #[arg(long, default_value = ALL_METRICS)]
    metrics: String,
    /// Report path; `.csv` selects CSV, anything else JSON. Default: JSON on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest column defining the groups.
    #[arg(long = "group-by")]
    group_by: Option<String>,
    #[arg(long, default_value = "epe,ts,div,vm-epe")]
    metrics: String,
    /// Table path; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1920)]
    width: usize,
    #[arg(long, default_value_t = 1080)]
    height: usize,
    /// Repetitions per stage (at least 10).
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(10..))]
    reps: u64,
    #[arg(long, env = "VFIQA_THREADS")]
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidConfig(_) | Error::OddDimensions { .. } => 2,
        Error::Io(_)
        | Error::MissingFlow(_)
        | Error::PartialFrame { .. }
        | Error::Y4mSignature
        | Error::Y4mHeader(_)
        | Error::UnsupportedColorspace(_)
        | Error::TruncatedFrame { .. }
        | Error::FloMagic(_)
        | Error::FloDimensions { .. }
        | Error::FloTruncated { .. }
        | Error::Manifest { .. }
        | Error::Csv(_) => 3,
        _ => 1,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn compute(args: ComputeArgs) -> Result<(), Error> {
    let cfg = args.scoring.config(&args.metrics)?;
    let dims = args.scoring.dims()?;
    let reference = open_video(&args.reference, dims)?;
    let distorted = open_video(&args.distorted, dims)?;
    let report = score_streams(reference, distorted, &cfg)?;
    match &args.out {
        None => write_json(&report, std::io::stdout().lock())?,
        Some(path) => {
            let mut out = create(path)?;
            if has_extension(path, "csv") {
                write_csv(&report, &mut out)?;
            } else {
                write_json(&report, &mut out)?;
            }
            out.flush()?;
            for (m, s) in &report.metrics {
                match s.aggregate {
                    Some(v) => println!("{:<10} {v:.6}", m.id()),
                    None => println!("{:<10} n/a", m.id()),
                }
            }
        }
    }
    Ok(())
}

fn run_correlate(args: CorrelateArgs) -> Result<(), Error> {
    let metrics = parse_metric_list(&args.metrics)?;
    let mut scoring = args.scoring.config(ALL_METRICS)?;
    scoring.metrics = metrics.clone();
    let opts = CorrelateOptions {
        metrics,
        group_by: args.group_by,
        scoring,
        dims: args.scoring.dims()?,
    };
    let manifest = read_manifest(&args.manifest)?;
    let table = correlate(&manifest, &opts)?;
    let mut out = create(&args.out)?;
    if has_extension(&args.out, "json") {
        write_table_json(&table, &mut out)?;
    } else {
        write_table_csv(&table, &mut out)?;
    }
    out.flush()?;
    for s in &table.skipped {
        eprintln!("warning: skipped group '{}' for {} (n = {}): {}", s.group, s.metric, s.n, s.reason);
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let run = || benchmark(args.width, args.height, args.reps as usize);
    let report = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(a) => compute(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
