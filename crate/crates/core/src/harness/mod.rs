//! Synthetic data, degradation, error metrics and benchmarks.

mod bench;
mod degrade;
mod synth;

pub use bench::{
    channel_mape, derive_seed, rank_profile, run_benchmark, scenario_label, write_long_csv,
    write_long_csv_file, BenchPlan, BenchReport, ChannelSummary, Corpus, ScenarioReport,
    ScenarioTiming, TaskSummary,
};
pub use degrade::{degrade, degrade_with_medians, mape, median_abs, DegradeSpec};
pub use synth::{
    gen_synthetic, lrf_spectral_radius, pmu_corpus, pmu_corpus_from, ChannelGen, Generator,
    PmuCorpus, PmuCorpusSpec, StepEvent, Synthetic, SyntheticSpec, Tone, CORPUS_BASE_KV,
    CORPUS_FREQ_GAIN, CORPUS_NOMINAL_HZ,
};

impl From<PmuCorpus> for Corpus {
    fn from(c: PmuCorpus) -> Self {
        Corpus {
            truth: c.synthetic.truth,
            record: Some(c.record),
            steady_median: c.synthetic.steady_median,
        }
    }
}
