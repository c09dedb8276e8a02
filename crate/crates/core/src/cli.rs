//! Command-line front end. Exit status: 0 success, 1 data error, 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{
    channel_mape, degrade, median_abs, pmu_corpus, rank_profile, run_benchmark,
    write_long_csv_file, BenchPlan, Corpus, DegradeSpec,
};
use crate::matrixify::Variant;
use crate::recovery::{impute_offline, predict_stream, RecoveryConfig};
use crate::report::{RecoveryReport, Timing};
use crate::series::{read_csv, write_csv, ChannelKind, ColumnSpec, CsvSchema, Dataset};

const BENCH_PMUS: usize = 10;
const BENCH_LEN: usize = 600;
const BENCH_RATE: f64 = 30.0;
const BENCH_WINDOW: usize = 600;

#[derive(Debug, Parser)]
#[command(
    name = "pmu-recovery",
    version,
    about = "Recover gappy, noisy multichannel PMU series by Page-matrix singular value thresholding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fill gaps and denoise a CSV offline, window by window.
    Impute(RunArgs),
    /// Replay a CSV as a stream and forecast each next sample.
    Predict(RunArgs),
    /// Degradation benchmark over drop rates, noise rates and variants.
    Bench(BenchArgs),
    /// Numerical rank of every window's stacked matrix.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Page,
    Hankel,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Page => Variant::Page,
            VariantArg::Hankel => Variant::Hankel,
        }
    }
}

#[derive(Debug, Args)]
struct Shape {
    /// Matrix rows.
    #[arg(long = "L", value_name = "ROWS")]
    rows: Option<usize>,
    /// Window length per channel.
    #[arg(long = "T", value_name = "SAMPLES")]
    window: Option<usize>,
    /// Only these columns, in this order.
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    channels: Option<Vec<String>>,
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set, default_value_t = true)]
    overwrite_observed: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    shape: Shape,
    #[arg(long, value_enum, default_value = "page")]
    variant: VariantArg,
    /// Treat the input as truth and drop this fraction of timestamps first.
    #[arg(long, default_value_t = 0.0)]
    drop: f64,
    /// Treat the input as truth and add noise of this fraction of each
    /// channel's median absolute value first.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Truth CSV; a synthetic 30-channel PMU corpus when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "bench-report.json")]
    output: PathBuf,
    #[command(flatten)]
    shape: Shape,
    /// Both variants when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    variant: Option<Vec<VariantArg>>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    drop: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    noise: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    shape: Shape,
    /// Both variants when omitted.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

/// Parse `argv` (program name first), run, and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Impute(a) => impute(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => bench(a),
        Command::Rank(a) => rank(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) if e.is_usage() => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn config(base: RecoveryConfig, shape: &Shape, variant: Variant) -> Result<RecoveryConfig> {
    let cfg = RecoveryConfig {
        rows: shape.rows.unwrap_or(base.rows),
        window: shape.window.unwrap_or(base.window),
        overwrite_observed: shape.overwrite_observed,
        ..base
    }
    .with_variant(variant);
    cfg.validate()?;
    Ok(cfg)
}

fn schema(shape: &Shape) -> CsvSchema {
    match &shape.channels {
        Some(ids) => CsvSchema::with_channels(
            ids.iter()
                .map(|id| ColumnSpec::new(id.clone(), ChannelKind::Generic))
                .collect(),
        ),
        None => CsvSchema::default(),
    }
}

/// `dir/stem.<suffix>` next to `input`.
fn derived_path(input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    input.with_file_name(format!("{stem}.{suffix}"))
}

fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    output.with_extension(suffix)
}

fn check_output(input: &Path, output: &Path) -> Result<()> {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => input == output,
    };
    if same {
        return Err(Error::Config(
            "output path must differ from the input".into(),
        ));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn degrade_spec(drop: f64, noise: f64, seed: u64) -> Result<DegradeSpec> {
    let spec = DegradeSpec::new(drop, noise, seed);
    spec.validate()?;
    Ok(spec)
}

/// Load the input and, when asked, degrade it. Returns the data to recover
/// and the truth to score against.
fn load(args: &RunArgs, spec: &DegradeSpec) -> Result<(Dataset, Option<Dataset>)> {
    let data = read_csv(&args.input, &schema(&args.shape))?;
    if spec.drop_rate == 0.0 && spec.noise_rate == 0.0 {
        return Ok((data, None));
    }
    let degraded = degrade(&data, spec)?;
    Ok((degraded, Some(data)))
}

fn finish_report(
    report: &mut RecoveryReport,
    truth: Option<&Dataset>,
    estimate: &Dataset,
    seed: u64,
) -> Result<()> {
    if let Some(truth) = truth {
        let start = truth.len() - estimate.len();
        report.channel_mape = channel_mape(&truth.slice(start..truth.len()), estimate)?;
        report.seed = Some(seed);
    }
    Ok(())
}

fn impute(args: RunArgs) -> Result<()> {
    let cfg = config(RecoveryConfig::offline(), &args.shape, args.variant.into())?;
    let spec = degrade_spec(args.drop, args.noise, args.seed)?;
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| derived_path(&args.input, "imputed.csv"));
    check_output(&args.input, &output)?;

    let (data, truth) = load(&args, &spec)?;
    let (recovered, mut report) = impute_offline(&data, &cfg)?;
    finish_report(&mut report, truth.as_ref(), &recovered, args.seed)?;
    write_csv(&output, &recovered)?;
    write_json(&sidecar(&output, "report.json"), &report)?;
    write_json(&sidecar(&output, "timing.json"), &report.timing)?;
    println!(
        "imputed {} channels x {} samples in {} windows -> {}",
        recovered.channel_count(),
        recovered.len(),
        report.windows.len(),
        output.display()
    );
    if let Some(m) = report.mean_mape() {
        println!("mean MAPE {m:.6e}");
    }
    Ok(())
}

fn predict(args: RunArgs) -> Result<()> {
    let cfg = config(RecoveryConfig::online(), &args.shape, args.variant.into())?;
    let spec = degrade_spec(args.drop, args.noise, args.seed)?;
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| derived_path(&args.input, "predicted.csv"));
    check_output(&args.input, &output)?;

    let (data, truth) = load(&args, &spec)?;
    let (predicted, mut report) = predict_stream(&data, &cfg)?;
    finish_report(&mut report, truth.as_ref(), &predicted, args.seed)?;
    write_csv(&output, &predicted)?;
    write_json(&sidecar(&output, "report.json"), &report)?;
    write_json(&sidecar(&output, "timing.json"), &report.timing)?;
    println!(
        "predicted {} steps for {} channels -> {}",
        predicted.len(),
        predicted.channel_count(),
        output.display()
    );
    if let Some(s) = report.timing.median_step_seconds {
        println!("median step {:.3} ms", s * 1e3);
    }
    if let Some(m) = report.mean_mape() {
        println!("mean MAPE {m:.6e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct RankRow {
    variant: Variant,
    window_start: usize,
    window_len: usize,
    rank: usize,
}

fn rank(args: RankArgs) -> Result<()> {
    let variants: Vec<Variant> = match args.variant {
        Some(v) => vec![v.into()],
        None => vec![Variant::Page, Variant::Hankel],
    };
    let cfgs = variants
        .iter()
        .map(|&v| config(RecoveryConfig::offline(), &args.shape, v))
        .collect::<Result<Vec<_>>>()?;
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| derived_path(&args.input, "rank.csv"));
    check_output(&args.input, &output)?;

    let data = read_csv(&args.input, &schema(&args.shape))?;
    let mut w = csv::Writer::from_path(&output).map_err(|e| Error::Csv {
        line: 0,
        message: e.to_string(),
    })?;
    for cfg in &cfgs {
        let plan = crate::recovery::window_plan(data.len(), cfg)?;
        let ranks = rank_profile(&data, cfg)?;
        for (range, rank) in plan.windows.iter().zip(&ranks) {
            w.serialize(RankRow {
                variant: cfg.variant,
                window_start: range.start,
                window_len: range.len(),
                rank: *rank,
            })
            .map_err(|e| Error::Csv {
                line: 0,
                message: e.to_string(),
            })?;
        }
        println!("{}: ranks {:?}", cfg.variant, ranks);
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BenchTimingFile<'a> {
    scenarios: &'a [crate::harness::ScenarioTiming],
}

fn bench(args: BenchArgs) -> Result<()> {
    let variants: Vec<Variant> = match &args.variant {
        Some(v) => v.iter().map(|&v| v.into()).collect(),
        None => vec![Variant::Page, Variant::Hankel],
    };
    let offline_base = RecoveryConfig::offline().with_shape(10, BENCH_WINDOW);
    for &v in &variants {
        config(offline_base.clone(), &args.shape, v)?;
    }
    let offline = config(offline_base, &args.shape, variants[0])?;
    let online = RecoveryConfig {
        overwrite_observed: args.shape.overwrite_observed,
        ..RecoveryConfig::online()
    };
    for &d in &args.drop {
        degrade_spec(d, 0.0, 0)?;
    }
    for &n in &args.noise {
        degrade_spec(0.0, n, 0)?;
    }
    if args.reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()));
    }
    if let Some(input) = &args.input {
        check_output(input, &args.output)?;
    }

    let mut corpus: Corpus = match &args.input {
        Some(path) => {
            let truth = read_csv(path, &schema(&args.shape))?;
            let steady_median = median_abs(&truth);
            Corpus {
                truth,
                record: None,
                steady_median,
            }
        }
        None => pmu_corpus(BENCH_PMUS, BENCH_LEN, BENCH_RATE, args.seed)?.into(),
    };
    if let (None, Some(ids)) = (&args.input, &args.shape.channels) {
        let keep: Vec<usize> = ids
            .iter()
            .map(|id| {
                corpus
                    .truth
                    .channels()
                    .iter()
                    .position(|c| &c.id == id)
                    .ok_or_else(|| Error::Config(format!("unknown channel `{id}`")))
            })
            .collect::<Result<_>>()?;
        corpus.steady_median = keep.iter().map(|&k| corpus.steady_median[k]).collect();
        corpus.truth = corpus.truth.select(ids)?;
    }

    let plan = BenchPlan {
        drop_rates: args.drop.clone(),
        noise_rates: args.noise.clone(),
        variants,
        reps: args.reps,
        seed: args.seed,
        offline,
        online: Some(online),
    };
    let (report, timings) = run_benchmark(&corpus, &plan)?;
    write_json(&args.output, &report)?;
    write_long_csv_file(sidecar(&args.output, "csv"), &report)?;
    write_json(
        &sidecar(&args.output, "timing.json"),
        &BenchTimingFile {
            scenarios: &timings,
        },
    )?;

    for (s, t) in report.scenarios.iter().zip(&timings) {
        match (&s.error, &s.impute, &s.predict) {
            (Some(e), _, _) => println!("{:<28} failed: {e}", s.label),
            (None, Some(i), p) => {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
                print!(
                    "{:<28} impute {} (LOCF {})",
                    s.label,
                    fmt(i.median_mape),
                    fmt(i.median_baseline_mape)
                );
                if let Some(p) = p {
                    print!(
                        " predict {} (persistence {})",
                        fmt(p.median_mape),
                        fmt(p.median_baseline_mape)
                    );
                }
                let step = t
                    .predict
                    .as_ref()
                    .and_then(|p: &Timing| p.median_step_seconds);
                if let Some(step) = step {
                    print!(" step {:.3} ms", step * 1e3);
                }
                println!();
            }
            _ => {}
        }
    }
    let failed = report
        .scenarios
        .iter()
        .filter(|s| s.error.is_some())
        .count();
    println!(
        "{} scenarios ({failed} failed) -> {}",
        report.scenarios.len(),
        args.output.display()
    );
    Ok(())
}
