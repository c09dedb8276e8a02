use serde::{Deserialize, Serialize};

use super::{ChannelSeries, Dataset};
use crate::error::{Error, Result};

/// How unobserved samples are preliminarily filled before matrix estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FillPolicy {
    /// Carry the last observation forward. A leading gap has no previous
    /// observation and is backfilled from the first observed sample.
    #[default]
    LastObservationCarriedForward,
}

/// Fill every unobserved value. Observed values and the mask are untouched.
pub fn fill_missing(series: &ChannelSeries, policy: FillPolicy) -> Result<ChannelSeries> {
    let FillPolicy::LastObservationCarriedForward = policy;
    let first = series
        .mask()
        .iter()
        .position(|&m| m)
        .ok_or_else(|| Error::AllMissingChannel(series.id.clone()))?;

    let mut last = series.values()[first];
    let values = series
        .values()
        .iter()
        .zip(series.mask())
        .map(|(&v, &observed)| {
            if observed {
                last = v;
                v
            } else {
                last
            }
        })
        .collect();
    series.with_values(values)
}

pub fn fill_dataset(data: &Dataset, policy: FillPolicy) -> Result<Dataset> {
    let channels = data
        .channels()
        .iter()
        .map(|c| fill_missing(c, policy))
        .collect::<Result<Vec<_>>>()?;
    data.with_channels(channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ChannelKind;

    const LOCF: FillPolicy = FillPolicy::LastObservationCarriedForward;

    fn series(values: &[f64], mask: &[bool]) -> ChannelSeries {
        ChannelSeries::new("x", ChannelKind::Generic, values.to_vec(), mask.to_vec()).unwrap()
    }

    #[test]
    fn carries_forward() {
        let s = series(&[1.0, f64::NAN, f64::NAN, 4.0], &[true, false, false, true]);
        let f = fill_missing(&s, LOCF).unwrap();
        assert_eq!(f.values(), &[1.0, 1.0, 1.0, 4.0]);
        assert_eq!(f.mask(), s.mask());
    }

    #[test]
    fn backfills_leading_gap() {
        let s = series(&[f64::NAN, 2.0, 3.0], &[false, true, true]);
        assert_eq!(fill_missing(&s, LOCF).unwrap().values(), &[2.0, 2.0, 3.0]);
    }

    #[test]
    fn fully_observed_is_identity() {
        let s = series(&[3.0, -1.0, 7.5], &[true, true, true]);
        assert_eq!(fill_missing(&s, LOCF).unwrap(), s);
    }

    #[test]
    fn all_missing_is_an_error() {
        let s = series(&[f64::NAN, f64::NAN], &[false, false]);
        assert!(matches!(fill_missing(&s, LOCF), Err(Error::AllMissingChannel(id)) if id == "x"));
    }
}
