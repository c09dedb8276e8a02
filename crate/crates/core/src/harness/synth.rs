use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::median;
use crate::series::{ChannelKind, ChannelSeries, ChannelTransform, Dataset, ScalingRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: f64,
    pub freq_hz: f64,
    /// Radians.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    Constant(f64),
    /// `f(t) = sum_g coeffs[g] * f(t - 1 - g)`, started from `init`
    /// (at least `coeffs.len()` values).
    Lrf {
        coeffs: Vec<f64>,
        init: Vec<f64>,
    },
    /// `offset + sum a sin(2 pi f t / rate + phase)`.
    Sinusoids {
        offset: f64,
        tones: Vec<Tone>,
    },
}

/// A level change of `height` from sample `at` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub at: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGen {
    pub id: String,
    pub kind: ChannelKind,
    pub generator: Generator,
    #[serde(default)]
    pub events: Vec<StepEvent>,
}

impl ChannelGen {
    pub fn new(id: impl Into<String>, generator: Generator) -> Self {
        Self {
            id: id.into(),
            kind: ChannelKind::Generic,
            generator,
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, at: usize, height: f64) -> Self {
        self.events.push(StepEvent { at, height });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rate_fps: f64,
    pub len: usize,
    pub channels: Vec<ChannelGen>,
}

/// Generated ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub truth: Dataset,
    /// Per channel, median absolute value before any event is added.
    pub steady_median: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Largest eigenvalue modulus of the LRF companion matrix.
pub fn lrf_spectral_radius(coeffs: &[f64]) -> f64 {
    let d = coeffs.len();
    if d == 0 {
        return 0.0;
    }
    let companion = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            coeffs[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn base_signal(gen: &Generator, len: usize, rate: f64) -> Result<Vec<f64>> {
    Ok(match gen {
        Generator::Constant(c) => vec![*c; len],
        Generator::Lrf { coeffs, init } => {
            if coeffs.is_empty() || init.len() < coeffs.len() {
                return Err(Error::config(format!(
                    "LRF of order {} needs at least that many initial values, got {}",
                    coeffs.len(),
                    init.len()
                )));
            }
            let mut f = init.clone();
            f.truncate(len);
            while f.len() < len {
                let n = f.len();
                let next = coeffs
                    .iter()
                    .enumerate()
                    .map(|(g, a)| a * f[n - 1 - g])
                    .sum();
                f.push(next);
            }
            f
        }
        Generator::Sinusoids { offset, tones } => (0..len)
            .map(|t| {
                let time = t as f64 / rate;
                offset
                    + tones
                        .iter()
                        .map(|w| w.amplitude * (2.0 * PI * w.freq_hz * time + w.phase).sin())
                        .sum::<f64>()
            })
            .collect(),
    })
}

/// Generate every channel of `spec`. Generators are deterministic; random
/// corpora draw their parameters up front (see [`pmu_corpus`]).
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.len == 0 || spec.channels.is_empty() {
        return Err(Error::config(
            "synthetic spec needs a length and at least one channel",
        ));
    }
    let mut warnings = Vec::new();
    let mut steady_median = Vec::with_capacity(spec.channels.len());
    let mut channels = Vec::with_capacity(spec.channels.len());
    for ch in &spec.channels {
        if let Generator::Lrf { coeffs, .. } = &ch.generator {
            let radius = lrf_spectral_radius(coeffs);
            if radius > 1.0 {
                warnings.push(format!(
                    "channel `{}`: LRF is unstable (spectral radius {radius:.4})",
                    ch.id
                ));
            }
        }
        let mut values = base_signal(&ch.generator, spec.len, spec.rate_fps)?;
        let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        steady_median.push(median(&mut abs).unwrap_or(0.0));
        for e in &ch.events {
            for v in values.iter_mut().skip(e.at) {
                *v += e.height;
            }
        }
        channels.push(ChannelSeries::observed(ch.id.clone(), ch.kind, values));
    }
    Ok(Synthetic {
        truth: Dataset::uniform(spec.rate_fps, channels)?,
        steady_median,
        warnings,
    })
}

/// Model-domain synthetic PMU data with the record that maps it back to
/// physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PmuCorpus {
    pub synthetic: Synthetic,
    pub record: ScalingRecord,
}

pub const CORPUS_BASE_KV: f64 = 345.0;
pub const CORPUS_NOMINAL_HZ: f64 = 60.0;
pub const CORPUS_FREQ_GAIN: f64 = 10.0;

/// Shape of a synthetic PMU corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmuCorpusSpec {
    pub pmus: usize,
    pub len: usize,
    pub rate_fps: f64,
    /// Oscillation modes shared by every channel, strongest first.
    pub modes_hz: Vec<f64>,
    pub seed: u64,
}

impl Default for PmuCorpusSpec {
    fn default() -> Self {
        Self {
            pmus: 10,
            len: 600,
            rate_fps: 30.0,
            modes_hz: vec![0.8, 1.8],
            seed: 0,
        }
    }
}

/// `pmus` PMUs with the default two modes (0.8 Hz and 1.8 Hz).
pub fn pmu_corpus(pmus: usize, len: usize, rate_fps: f64, seed: u64) -> Result<PmuCorpus> {
    pmu_corpus_from(&PmuCorpusSpec {
        pmus,
        len,
        rate_fps,
        seed,
        ..PmuCorpusSpec::default()
    })
}

/// Each PMU has a voltage magnitude (per unit), a voltage angle already
/// referenced to a common bus (degrees) and a scaled frequency deviation.
/// All channels share the modes with random per-PMU amplitude and phase, so
/// the stacked matrix is low rank. Mode `k` is weighted down by `0.6^k` on
/// magnitudes and `0.5^k` on angles and frequencies.
pub fn pmu_corpus_from(spec: &PmuCorpusSpec) -> Result<PmuCorpus> {
    if spec.pmus == 0 {
        return Err(Error::config("corpus needs at least one PMU"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gens = Vec::with_capacity(3 * spec.pmus);
    let mut transforms = Vec::with_capacity(3 * spec.pmus);
    for p in 1..=spec.pmus {
        let a: f64 = rng.random_range(0.5..1.5);
        let phases: Vec<f64> = spec
            .modes_hz
            .iter()
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        let angle0: f64 = -rng.random_range(3.0..15.0);
        let tones = |weight: f64, decay: f64| {
            spec.modes_hz
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(k, (&f, &ph))| Tone {
                    amplitude: a * weight * decay.powi(k as i32),
                    freq_hz: f,
                    phase: ph,
                })
                .collect::<Vec<_>>()
        };
        let mut push = |suffix: &str, kind, offset, tones, transform| {
            let id = format!("pmu{p}_{suffix}");
            gens.push(ChannelGen {
                id: id.clone(),
                kind,
                generator: Generator::Sinusoids { offset, tones },
                events: Vec::new(),
            });
            transforms.push((id, transform));
        };
        push(
            "vm",
            ChannelKind::VoltageMagnitude,
            1.0,
            tones(0.01, 0.6),
            ChannelTransform::PerUnit {
                base: CORPUS_BASE_KV,
            },
        );
        push(
            "va",
            ChannelKind::VoltageAngle,
            angle0,
            tones(2.0, 0.5),
            ChannelTransform::Identity,
        );
        push(
            "f",
            ChannelKind::Frequency,
            0.0,
            tones(0.2, 0.5),
            ChannelTransform::Frequency {
                nominal_hz: CORPUS_NOMINAL_HZ,
                gain: CORPUS_FREQ_GAIN,
            },
        );
    }
    let synthetic = gen_synthetic(&SyntheticSpec {
        rate_fps: spec.rate_fps,
        len: spec.len,
        channels: gens,
    })?;
    Ok(PmuCorpus {
        synthetic,
        record: ScalingRecord {
            transforms,
            reference: None,
        },
    })
}
