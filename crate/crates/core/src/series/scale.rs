//! Channel scaling into the model domain and its recorded inverse.
//!
//! Voltage magnitudes go to per-unit, angles are unwrapped and referenced to
//! one angle channel, frequencies become `(f - nominal) * gain`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{fill_dataset, ChannelKind, ChannelSeries, Dataset, FillPolicy};
use crate::error::{Error, Result};

const TURN: f64 = 360.0;

/// Which angle channel is subtracted from every angle channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AngleReference {
    /// The angle channel with the fewest missing samples (first on ties).
    #[default]
    FewestMissing,
    Channel(String),
    /// Angles are already referenced; only unwrap.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    /// Base value per voltage-magnitude channel, in the channel's units.
    pub base_kv: BTreeMap<String, f64>,
    pub reference: AngleReference,
    pub nominal_hz: f64,
    pub freq_gain: f64,
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        Self {
            base_kv: BTreeMap::new(),
            reference: AngleReference::FewestMissing,
            nominal_hz: 60.0,
            freq_gain: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelTransform {
    PerUnit {
        base: f64,
    },
    /// Whole turns added by unwrapping, per sample.
    Angle {
        turns: Vec<i64>,
    },
    Frequency {
        nominal_hz: f64,
        gain: f64,
    },
    Identity,
}

/// Everything needed to map model-domain values back to physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub transforms: Vec<(String, ChannelTransform)>,
    /// Reference channel id and its unwrapped series.
    pub reference: Option<(String, Vec<f64>)>,
}

/// Integer number of turns to add at each sample so that successive
/// differences of the observed samples fall in (-180, 180]. Unobserved or
/// non-finite samples inherit the running offset.
pub fn unwrap_turns(values: &[f64], mask: &[bool]) -> Vec<i64> {
    let mut turns = Vec::with_capacity(values.len());
    let mut offset = 0i64;
    let mut prev: Option<f64> = None;
    for (&v, &observed) in values.iter().zip(mask) {
        if observed && v.is_finite() {
            if let Some(p) = prev {
                let d = v - p;
                offset -= ((d - 180.0) / TURN).ceil() as i64;
            }
            prev = Some(v);
        }
        turns.push(offset);
    }
    turns
}

/// Standard cumulative phase unwrap in degrees.
pub fn unwrap_angles(series: &ChannelSeries) -> ChannelSeries {
    let turns = unwrap_turns(series.values(), series.mask());
    let values = series
        .values()
        .iter()
        .zip(&turns)
        .map(|(v, &k)| v + TURN * k as f64)
        .collect();
    series.with_values(values).expect("unwrap preserves length")
}

fn pick_reference(data: &Dataset, policy: &ScalingPolicy) -> Result<Option<usize>> {
    let angles = || {
        data.channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ChannelKind::VoltageAngle)
    };
    match &policy.reference {
        AngleReference::None => Ok(None),
        AngleReference::Channel(id) => {
            let (idx, ch) = data
                .channels()
                .iter()
                .enumerate()
                .find(|(_, c)| &c.id == id)
                .ok_or_else(|| Error::config(format!("reference channel `{id}` not in dataset")))?;
            if ch.kind != ChannelKind::VoltageAngle {
                return Err(Error::config(format!(
                    "reference channel `{id}` is {:?}, not a voltage angle",
                    ch.kind
                )));
            }
            Ok(Some(idx))
        }
        AngleReference::FewestMissing => Ok(angles()
            .min_by_key(|(i, c)| (c.missing_count(), *i))
            .map(|(i, _)| i)),
    }
}

/// Scale every channel by kind. Values at unobserved samples are transformed
/// too, so fill before scaling (see [`prepare`]).
pub fn scale_dataset(data: &Dataset, policy: &ScalingPolicy) -> Result<(Dataset, ScalingRecord)> {
    if !(policy.freq_gain.is_finite() && policy.freq_gain != 0.0) {
        return Err(Error::config("frequency gain must be finite and non-zero"));
    }
    let reference = pick_reference(data, policy)?.map(|idx| {
        let ch = &data.channels()[idx];
        (ch.id.clone(), unwrap_angles(ch).values().to_vec())
    });

    let mut channels = Vec::with_capacity(data.channel_count());
    let mut transforms = Vec::with_capacity(data.channel_count());
    for ch in data.channels() {
        let (values, transform): (Vec<f64>, _) = match ch.kind {
            ChannelKind::VoltageMagnitude => {
                let base = *policy.base_kv.get(&ch.id).ok_or_else(|| {
                    Error::config(format!("no base value for magnitude channel `{}`", ch.id))
                })?;
                if !(base.is_finite() && base > 0.0) {
                    return Err(Error::config(format!(
                        "base for `{}` must be positive, got {base}",
                        ch.id
                    )));
                }
                (
                    ch.values().iter().map(|v| v / base).collect(),
                    ChannelTransform::PerUnit { base },
                )
            }
            ChannelKind::VoltageAngle => {
                let turns = unwrap_turns(ch.values(), ch.mask());
                let values = ch
                    .values()
                    .iter()
                    .zip(&turns)
                    .enumerate()
                    .map(|(i, (v, &k))| {
                        let unwrapped = v + TURN * k as f64;
                        match &reference {
                            Some((_, r)) => unwrapped - r[i],
                            None => unwrapped,
                        }
                    })
                    .collect();
                (values, ChannelTransform::Angle { turns })
            }
            ChannelKind::Frequency => (
                ch.values()
                    .iter()
                    .map(|f| (f - policy.nominal_hz) * policy.freq_gain)
                    .collect(),
                ChannelTransform::Frequency {
                    nominal_hz: policy.nominal_hz,
                    gain: policy.freq_gain,
                },
            ),
            ChannelKind::Generic => (ch.values().to_vec(), ChannelTransform::Identity),
        };
        channels.push(ch.with_values(values)?);
        transforms.push((ch.id.clone(), transform));
    }
    Ok((
        data.with_channels(channels)?,
        ScalingRecord {
            transforms,
            reference,
        },
    ))
}

/// Fill gaps, then scale.
pub fn prepare(
    data: &Dataset,
    fill: FillPolicy,
    policy: &ScalingPolicy,
) -> Result<(Dataset, ScalingRecord)> {
    scale_dataset(&fill_dataset(data, fill)?, policy)
}

impl ScalingRecord {
    fn transform(&self, id: &str) -> Result<&ChannelTransform> {
        self.transforms
            .iter()
            .find(|(c, _)| c == id)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::config(format!("channel `{id}` has no recorded transform")))
    }

    /// Map model-domain values of one channel back to physical units. `start`
    /// is the index of `values[0]` on the time base the record was built on.
    pub fn invert_values(&self, id: &str, start: usize, values: &[f64]) -> Result<Vec<f64>> {
        let end = start + values.len();
        match self.transform(id)? {
            ChannelTransform::PerUnit { base } => Ok(values.iter().map(|y| y * base).collect()),
            ChannelTransform::Frequency { nominal_hz, gain } => {
                Ok(values.iter().map(|y| y / gain + nominal_hz).collect())
            }
            ChannelTransform::Identity => Ok(values.to_vec()),
            ChannelTransform::Angle { turns } => {
                if end > turns.len() {
                    return Err(Error::shape(format!(
                        "samples {start}..{end} outside the recorded {} for `{id}`",
                        turns.len()
                    )));
                }
                Ok(values
                    .iter()
                    .enumerate()
                    .map(|(i, y)| {
                        let t = start + i;
                        let r = self.reference.as_ref().map_or(0.0, |(_, r)| r[t]);
                        y + r - TURN * turns[t] as f64
                    })
                    .collect())
            }
        }
    }

    /// Inverse of [`scale_dataset`] for data aligned with the original time
    /// base starting at sample `start`.
    pub fn invert_from(&self, data: &Dataset, start: usize) -> Result<Dataset> {
        let channels = data
            .channels()
            .iter()
            .map(|ch| ch.with_values(self.invert_values(&ch.id, start, ch.values())?))
            .collect::<Result<Vec<_>>>()?;
        data.with_channels(channels)
    }

    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        self.invert_from(data, 0)
    }
}
