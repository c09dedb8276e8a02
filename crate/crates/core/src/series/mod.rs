//! Channel time series, datasets and channel-level preprocessing.
//!
//! A [`Dataset`] is an ordered set of channels sampled on one uniform time
//! base. Missing samples are carried by a per-sample observation mask; the
//! value slot of an unobserved sample is NaN until a fill policy runs.

mod csv;
mod fill;
mod scale;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{read_csv, read_csv_from, write_csv, write_csv_to, ColumnSpec, CsvSchema};
pub use self::fill::{fill_dataset, fill_missing, FillPolicy};
pub use self::scale::{
    prepare, scale_dataset, unwrap_angles, unwrap_turns, AngleReference, ChannelTransform,
    ScalingPolicy, ScalingRecord,
};

/// Relative tolerance used when checking that timestamps are evenly spaced.
const STEP_TOLERANCE: f64 = 1e-3;

/// Physical quantity carried by a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ChannelKind {
    VoltageMagnitude,
    VoltageAngle,
    Frequency,
    #[default]
    Generic,
}

/// One measurement channel. `mask[i]` is true when sample `i` was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSeries {
    pub id: String,
    pub kind: ChannelKind,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ChannelSeries {
    pub fn new(
        id: impl Into<String>,
        kind: ChannelKind,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let id = id.into();
        if values.len() != mask.len() {
            return Err(Error::shape(format!(
                "channel `{id}`: {} values but {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        Ok(Self {
            id,
            kind,
            values,
            mask,
        })
    }

    /// A fully observed channel.
    pub fn observed(id: impl Into<String>, kind: ChannelKind, values: Vec<f64>) -> Self {
        let mask = vec![true; values.len()];
        Self {
            id: id.into(),
            kind,
            values,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn missing_count(&self) -> usize {
        self.len() - self.observed_count()
    }

    /// Replace the values, keeping id, kind and mask.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.id.clone(), self.kind, values, self.mask.clone())
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            id: self.id.clone(),
            kind: self.kind,
            values: self.values[range.clone()].to_vec(),
            mask: self.mask[range].to_vec(),
        }
    }

    pub fn into_parts(self) -> (String, ChannelKind, Vec<f64>, Vec<bool>) {
        (self.id, self.kind, self.values, self.mask)
    }
}

/// Channels sharing one uniform time base. Channel order is significant: it
/// fixes the block order of stacked matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    timestamps: Vec<f64>,
    rate_fps: f64,
    channels: Vec<ChannelSeries>,
}

impl Dataset {
    /// Builds a dataset, checking that timestamps are strictly increasing with a
    /// constant step and that every channel matches their length.
    pub fn new(timestamps: Vec<f64>, rate_fps: f64, channels: Vec<ChannelSeries>) -> Result<Self> {
        if !(rate_fps.is_finite() && rate_fps > 0.0) {
            return Err(Error::config(format!(
                "sample rate must be positive, got {rate_fps}"
            )));
        }
        check_uniform(&timestamps)?;
        for ch in &channels {
            if ch.len() != timestamps.len() {
                return Err(Error::shape(format!(
                    "channel `{}` has {} samples, time base has {}",
                    ch.id,
                    ch.len(),
                    timestamps.len()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for ch in &channels {
            if !seen.insert(ch.id.as_str()) {
                return Err(Error::config(format!("duplicate channel id `{}`", ch.id)));
            }
        }
        Ok(Self {
            timestamps,
            rate_fps,
            channels,
        })
    }

    /// Dataset on the time base `t_i = i / rate_fps`.
    pub fn uniform(rate_fps: f64, channels: Vec<ChannelSeries>) -> Result<Self> {
        let len = channels.first().map_or(0, ChannelSeries::len);
        let timestamps = (0..len).map(|i| i as f64 / rate_fps).collect();
        Self::new(timestamps, rate_fps, channels)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn rate_fps(&self) -> f64 {
        self.rate_fps
    }

    pub fn channels(&self) -> &[ChannelSeries] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, id: &str) -> Option<&ChannelSeries> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn channel_ids(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.id.clone()).collect()
    }

    /// Same time base with a new set of channels.
    pub fn with_channels(&self, channels: Vec<ChannelSeries>) -> Result<Self> {
        Self::new(self.timestamps.clone(), self.rate_fps, channels)
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            timestamps: self.timestamps[range.clone()].to_vec(),
            rate_fps: self.rate_fps,
            channels: self
                .channels
                .iter()
                .map(|c| c.slice(range.clone()))
                .collect(),
        }
    }

    /// Keep only the named channels, in the order given.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let channels = ids
            .iter()
            .map(|id| {
                self.channel(id)
                    .cloned()
                    .ok_or_else(|| Error::config(format!("unknown channel `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_channels(channels)
    }

    pub fn into_channels(self) -> Vec<ChannelSeries> {
        self.channels
    }
}

fn check_uniform(timestamps: &[f64]) -> Result<()> {
    if timestamps.iter().any(|t| !t.is_finite()) {
        return Err(Error::shape("timestamps must be finite"));
    }
    if timestamps.len() < 2 {
        return Ok(());
    }
    let step = timestamps[1] - timestamps[0];
    if step <= 0.0 {
        return Err(Error::NonUniformTimestamps {
            line: 1,
            expected: step,
            found: step,
        });
    }
    for (i, w) in timestamps.windows(2).enumerate().skip(1) {
        let d = w[1] - w[0];
        if (d - step).abs() > STEP_TOLERANCE * step {
            return Err(Error::NonUniformTimestamps {
                line: i as u64 + 1,
                expected: step,
                found: d,
            });
        }
    }
    Ok(())
}

/// Sample rate implied by the first timestamp step.
pub(crate) fn infer_rate(timestamps: &[f64]) -> Result<f64> {
    check_uniform(timestamps)?;
    match timestamps {
        [t0, t1, ..] => Ok(1.0 / (t1 - t0)),
        _ => Err(Error::shape(
            "at least two samples are needed to infer a sample rate",
        )),
    }
}
