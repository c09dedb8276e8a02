use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::degrade::{degrade_with_medians, mape, DegradeSpec};
use crate::error::{Error, Result};
use crate::matrixify::{stack_windows, Variant};
use crate::osvt::numerical_rank;
use crate::recovery::{impute_offline, predict_stream, window_plan, RecoveryConfig};
use crate::report::{median, ChannelMape, Timing};
use crate::series::{fill_dataset, ChannelSeries, Dataset, ScalingRecord};

/// Numerical rank of the stacked matrix of every window in `cfg`'s plan.
pub fn rank_profile(data: &Dataset, cfg: &RecoveryConfig) -> Result<Vec<usize>> {
    let plan = window_plan(data.len(), cfg)?;
    let filled = fill_dataset(data, cfg.fill)?;
    plan.windows
        .iter()
        .map(|r| {
            let windows = filled
                .channels()
                .iter()
                .map(|c| (c.id.as_str(), &c.values()[r.clone()]));
            let m = stack_windows(windows, cfg.rows, cfg.variant, r.start)?;
            numerical_rank(m.entries())
        })
        .collect()
}

/// Ground truth to benchmark against.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Model-domain truth; degradation and recovery run on it.
    pub truth: Dataset,
    /// Maps model-domain values to the units MAPE is measured in. `None`
    /// measures in the model domain.
    pub record: Option<ScalingRecord>,
    /// Reference values for the noise level, one per channel.
    pub steady_median: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub drop_rates: Vec<f64>,
    pub noise_rates: Vec<f64>,
    pub variants: Vec<Variant>,
    pub reps: usize,
    pub seed: u64,
    pub offline: RecoveryConfig,
    /// Skip online prediction when `None`.
    pub online: Option<RecoveryConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: String,
    /// Median over repetitions.
    pub mape: Option<f64>,
    pub baseline_mape: Option<f64>,
}

/// Medians over repetitions of one task (imputation or prediction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    /// Median over repetitions of the channel-mean MAPE.
    pub median_mape: Option<f64>,
    pub median_baseline_mape: Option<f64>,
    pub channels: Vec<ChannelSummary>,
    /// Kept rank of every window (or step) in the first repetition.
    pub kept_ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub label: String,
    pub drop_rate: f64,
    pub noise_rate: f64,
    pub variant: Variant,
    pub seeds: Vec<u64>,
    /// Set when the scenario failed; the other scenarios still run.
    pub error: Option<String>,
    pub impute: Option<TaskSummary>,
    pub predict: Option<TaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub plan: BenchPlan,
    pub scenarios: Vec<ScenarioReport>,
}

/// Wall-clock figures per scenario, kept out of [`BenchReport`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTiming {
    pub label: String,
    pub impute: Timing,
    pub predict: Option<Timing>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for one degradation draw. Variants share draws so that they are
/// compared on identical inputs.
pub fn derive_seed(master: u64, drop_idx: usize, noise_idx: usize, rep: usize) -> u64 {
    let mut s = splitmix64(master);
    for k in [drop_idx, noise_idx, rep] {
        s = splitmix64(s ^ k as u64);
    }
    s
}

pub fn scenario_label(drop: f64, noise: f64, variant: Variant) -> String {
    format!("drop{drop}_noise{noise}_{variant}")
}

fn to_units(data: &Dataset, record: Option<&ScalingRecord>, start: usize) -> Result<Dataset> {
    match record {
        Some(r) => r.invert_from(data, start),
        None => Ok(data.clone()),
    }
}

/// Per-channel MAPE of `estimate` against `truth` (aligned datasets).
pub fn channel_mape(truth: &Dataset, estimate: &Dataset) -> Result<Vec<ChannelMape>> {
    if truth.channel_count() != estimate.channel_count() {
        return Err(Error::shape("truth and estimate have different channels"));
    }
    truth
        .channels()
        .iter()
        .zip(estimate.channels())
        .map(|(a, e)| {
            let (mape, excluded) = match mape(a.values(), e.values()) {
                Ok((m, x)) => (Some(m), x),
                Err(Error::MapeUndefined) => (None, a.len()),
                Err(err) => return Err(err),
            };
            Ok(ChannelMape {
                channel: a.id.clone(),
                mape,
                excluded,
            })
        })
        .collect()
}

fn mean_defined(rows: &[ChannelMape]) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(|c| c.mape).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Shift every channel one sample later: the persistence forecast of `filled`
/// for samples `start..`.
fn persistence(filled: &Dataset, start: usize) -> Result<Dataset> {
    let channels = filled
        .channels()
        .iter()
        .map(|c| {
            ChannelSeries::observed(
                c.id.clone(),
                c.kind,
                c.values()[start - 1..c.len() - 1].to_vec(),
            )
        })
        .collect();
    Dataset::new(
        filled.timestamps()[start..].to_vec(),
        filled.rate_fps(),
        channels,
    )
}

/// Collected repetitions of one task.
#[derive(Default)]
struct TaskRuns {
    estimate: Vec<Vec<ChannelMape>>,
    baseline: Vec<Vec<ChannelMape>>,
    kept_ranks: Vec<usize>,
    steps: Vec<f64>,
    total: f64,
}

impl TaskRuns {
    fn summarize(self) -> (TaskSummary, Timing) {
        let channels = self.estimate.first().map_or(0, Vec::len);
        let per_channel = |runs: &[Vec<ChannelMape>], k: usize| {
            let mut v: Vec<f64> = runs.iter().filter_map(|r| r[k].mape).collect();
            median(&mut v)
        };
        let summary = TaskSummary {
            median_mape: median(
                &mut self
                    .estimate
                    .iter()
                    .filter_map(|r| mean_defined(r))
                    .collect::<Vec<_>>(),
            ),
            median_baseline_mape: median(
                &mut self
                    .baseline
                    .iter()
                    .filter_map(|r| mean_defined(r))
                    .collect::<Vec<_>>(),
            ),
            channels: (0..channels)
                .map(|k| ChannelSummary {
                    channel: self.estimate[0][k].channel.clone(),
                    mape: per_channel(&self.estimate, k),
                    baseline_mape: per_channel(&self.baseline, k),
                })
                .collect(),
            kept_ranks: self.kept_ranks,
        };
        (summary, Timing::from_steps(self.total, self.steps))
    }
}

fn run_scenario(
    corpus: &Corpus,
    plan: &BenchPlan,
    (di, ni): (usize, usize),
    variant: Variant,
) -> Result<(ScenarioReport, ScenarioTiming)> {
    let drop = plan.drop_rates[di];
    let noise = plan.noise_rates[ni];
    let label = scenario_label(drop, noise, variant);
    let offline = plan.offline.clone().with_variant(variant);
    let online = plan.online.clone().map(|c| c.with_variant(variant));
    offline.validate()?;
    if let Some(c) = &online {
        c.validate()?;
    }
    let record = corpus.record.as_ref();
    let truth_units = to_units(&corpus.truth, record, 0)?;

    let mut seeds = Vec::with_capacity(plan.reps);
    let mut imp = TaskRuns::default();
    let mut pred = TaskRuns::default();
    for rep in 0..plan.reps {
        let seed = derive_seed(plan.seed, di, ni, rep);
        seeds.push(seed);
        let spec = DegradeSpec::new(drop, noise, seed);
        let degraded = degrade_with_medians(&corpus.truth, &spec, &corpus.steady_median)?;
        let filled = fill_dataset(&degraded, offline.fill)?;

        let (recovered, report) = impute_offline(&degraded, &offline)?;
        imp.estimate.push(channel_mape(
            &truth_units,
            &to_units(&recovered, record, 0)?,
        )?);
        imp.baseline
            .push(channel_mape(&truth_units, &to_units(&filled, record, 0)?)?);
        if rep == 0 {
            imp.kept_ranks = report.kept_ranks();
        }
        imp.total += report.timing.total_seconds;
        imp.steps.extend(report.timing.median_step_seconds);

        if let Some(cfg) = &online {
            let t = cfg.window;
            let (predicted, report) = predict_stream(&degraded, cfg)?;
            let truth_tail = truth_units.slice(t..truth_units.len());
            pred.estimate.push(channel_mape(
                &truth_tail,
                &to_units(&predicted, record, t)?,
            )?);
            pred.baseline.push(channel_mape(
                &truth_tail,
                &to_units(&persistence(&filled, t)?, record, t)?,
            )?);
            if rep == 0 {
                pred.kept_ranks = report.kept_ranks();
            }
            pred.total += report.timing.total_seconds;
            pred.steps.extend(report.timing.median_step_seconds);
        }
    }

    let (impute, impute_timing) = imp.summarize();
    let (predict, predict_timing) = if online.is_some() {
        let (s, t) = pred.summarize();
        (Some(s), Some(t))
    } else {
        (None, None)
    };
    Ok((
        ScenarioReport {
            label: label.clone(),
            drop_rate: drop,
            noise_rate: noise,
            variant,
            seeds,
            error: None,
            impute: Some(impute),
            predict,
        },
        ScenarioTiming {
            label,
            impute: impute_timing,
            predict: predict_timing,
        },
    ))
}

/// Run every drop x noise x variant scenario `reps` times. A failing scenario
/// is recorded with its error and does not stop the others. Step timings in
/// the returned [`ScenarioTiming`] are medians over repetitions of the
/// per-run median step time.
pub fn run_benchmark(
    corpus: &Corpus,
    plan: &BenchPlan,
) -> Result<(BenchReport, Vec<ScenarioTiming>)> {
    if plan.reps == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    if plan.drop_rates.is_empty() || plan.noise_rates.is_empty() || plan.variants.is_empty() {
        return Err(Error::config(
            "benchmark needs at least one drop rate, noise rate and variant",
        ));
    }
    for &d in &plan.drop_rates {
        DegradeSpec::new(d, 0.0, 0).validate()?;
    }
    for &n in &plan.noise_rates {
        DegradeSpec::new(0.0, n, 0).validate()?;
    }
    if corpus.steady_median.len() != corpus.truth.channel_count() {
        return Err(Error::shape(
            "corpus needs one steady-state median per channel",
        ));
    }

    let mut scenarios = Vec::new();
    let mut timings = Vec::new();
    for di in 0..plan.drop_rates.len() {
        for ni in 0..plan.noise_rates.len() {
            for &variant in &plan.variants {
                match run_scenario(corpus, plan, (di, ni), variant) {
                    Ok((r, t)) => {
                        scenarios.push(r);
                        timings.push(t);
                    }
                    Err(e) => {
                        let label =
                            scenario_label(plan.drop_rates[di], plan.noise_rates[ni], variant);
                        scenarios.push(ScenarioReport {
                            label: label.clone(),
                            drop_rate: plan.drop_rates[di],
                            noise_rate: plan.noise_rates[ni],
                            variant,
                            seeds: Vec::new(),
                            error: Some(e.to_string()),
                            impute: None,
                            predict: None,
                        });
                        timings.push(ScenarioTiming {
                            label,
                            ..Default::default()
                        });
                    }
                }
            }
        }
    }
    Ok((
        BenchReport {
            plan: plan.clone(),
            scenarios,
        },
        timings,
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Long-format table with columns `scenario, channel, metric, value`. The
/// channel column is `all` for scenario-level figures.
pub fn write_long_csv<W: Write>(writer: W, report: &BenchReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(["scenario", "channel", "metric", "value"])
        .map_err(csv_err)?;
    for s in &report.scenarios {
        for (task, summary) in [("impute", &s.impute), ("predict", &s.predict)] {
            let Some(summary) = summary else { continue };
            let mut row = |channel: &str, metric: String, value: Option<f64>| {
                w.write_record([s.label.as_str(), channel, &metric, &fmt_opt(value)])
                    .map_err(csv_err)
            };
            row("all", format!("{task}_mape"), summary.median_mape)?;
            row(
                "all",
                format!("{task}_baseline_mape"),
                summary.median_baseline_mape,
            )?;
            for c in &summary.channels {
                row(&c.channel, format!("{task}_mape"), c.mape)?;
                row(&c.channel, format!("{task}_baseline_mape"), c.baseline_mape)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_long_csv_file(path: impl AsRef<Path>, report: &BenchReport) -> Result<()> {
    write_long_csv(std::fs::File::create(path)?, report)
}
