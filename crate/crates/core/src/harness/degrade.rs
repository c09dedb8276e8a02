use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::median;
use crate::series::{ChannelSeries, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradeSpec {
    /// Fraction of timestamps dropped from every target channel at once.
    pub drop_rate: f64,
    /// Noise standard deviation as a fraction of the channel's median
    /// absolute steady-state value.
    pub noise_rate: f64,
    /// `None` targets every channel.
    pub target_channels: Option<Vec<String>>,
    pub seed: u64,
}

impl DegradeSpec {
    pub fn new(drop_rate: f64, noise_rate: f64, seed: u64) -> Self {
        Self {
            drop_rate,
            noise_rate,
            target_channels: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err(Error::config(format!(
                "drop rate must lie in [0, 1], got {}",
                self.drop_rate
            )));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::config(format!(
                "noise rate must be a non-negative number, got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// Median absolute value of every channel.
pub fn median_abs(data: &Dataset) -> Vec<f64> {
    data.channels()
        .iter()
        .map(|c| {
            let mut abs: Vec<f64> = c
                .values()
                .iter()
                .zip(c.mask())
                .filter(|(_, &m)| m)
                .map(|(v, _)| v.abs())
                .collect();
            median(&mut abs).unwrap_or(0.0)
        })
        .collect()
}

/// [`degrade_with_medians`] with the medians taken from `data` itself.
pub fn degrade(data: &Dataset, spec: &DegradeSpec) -> Result<Dataset> {
    degrade_with_medians(data, spec, &median_abs(data))
}

/// Drop `round(drop_rate * len)` timestamps, chosen uniformly without
/// replacement, from every target channel (values become NaN, mask false),
/// then add Gaussian noise with standard deviation `noise_rate * medians[c]`
/// to the remaining observed samples.
pub fn degrade_with_medians(
    data: &Dataset,
    spec: &DegradeSpec,
    medians: &[f64],
) -> Result<Dataset> {
    spec.validate()?;
    if medians.len() != data.channel_count() {
        return Err(Error::shape(format!(
            "{} medians for {} channels",
            medians.len(),
            data.channel_count()
        )));
    }
    if let Some(targets) = &spec.target_channels {
        if let Some(missing) = targets.iter().find(|id| data.channel(id).is_none()) {
            return Err(Error::config(format!("unknown target channel `{missing}`")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = data.len();
    let count = (spec.drop_rate * len as f64).round() as usize;
    let mut dropped = vec![false; len];
    for i in sample(&mut rng, len, count.min(len)).iter() {
        dropped[i] = true;
    }

    let channels = data
        .channels()
        .iter()
        .zip(medians)
        .map(|(c, &med)| {
            let targeted = spec
                .target_channels
                .as_ref()
                .is_none_or(|ids| ids.contains(&c.id));
            if !targeted {
                return Ok(c.clone());
            }
            let std = spec.noise_rate * med;
            let mut values = c.values().to_vec();
            let mut mask = c.mask().to_vec();
            for t in 0..len {
                if dropped[t] {
                    values[t] = f64::NAN;
                    mask[t] = false;
                } else if mask[t] && std > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    values[t] += std * z;
                }
            }
            ChannelSeries::new(c.id.clone(), c.kind, values, mask)
        })
        .collect::<Result<Vec<_>>>()?;
    data.with_channels(channels)
}

/// Mean absolute relative error. Indices where the truth is zero are left
/// out; their count is returned alongside.
pub fn mape(truth: &[f64], estimate: &[f64]) -> Result<(f64, usize)> {
    if truth.len() != estimate.len() {
        return Err(Error::shape(format!(
            "truth has {} samples, estimate {}",
            truth.len(),
            estimate.len()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (&a, &e) in truth.iter().zip(estimate) {
        if a != 0.0 {
            sum += ((a - e) / a).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::MapeUndefined);
    }
    Ok((sum / used as f64, truth.len() - used))
}
