use std::ops::Range;
use std::time::Instant;

use super::RecoveryConfig;
use crate::error::{Error, Result};
use crate::matrixify::{reshape_back, stack_windows, Variant};
use crate::osvt::osvt_estimate;
use crate::report::{RecoveryReport, Timing, WindowSummary};
use crate::series::{fill_dataset, ChannelSeries, Dataset};

/// How a series of a given length is cut into estimation windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub windows: Vec<Range<usize>>,
    /// Samples that fit no window and are left as they are.
    pub passthrough: Option<Range<usize>>,
}

/// Full windows of length `T`, then the remainder as one short window: a
/// Page remainder is trimmed to a multiple of `L`, a Hankel remainder is
/// used whole. A remainder shorter than `L` is passed through.
pub fn window_plan(len: usize, cfg: &RecoveryConfig) -> Result<WindowPlan> {
    cfg.validate()?;
    let (t, l) = (cfg.window, cfg.rows);
    if len < t {
        return Err(Error::shape(format!(
            "series has {len} samples, fewer than one window of T={t}"
        )));
    }
    let full = len / t;
    let mut windows: Vec<Range<usize>> = (0..full).map(|k| k * t..(k + 1) * t).collect();
    let start = full * t;
    let rest = len - start;
    let usable = match cfg.variant {
        Variant::Page => rest - rest % l,
        Variant::Hankel => rest,
    };
    let end = if usable >= l {
        windows.push(start..start + usable);
        start + usable
    } else {
        start
    };
    Ok(WindowPlan {
        windows,
        passthrough: (end < len).then_some(end..len),
    })
}

/// Recover every channel window by window. Unobserved samples are filled over
/// the whole channel first, so a gap at a window boundary is filled from the
/// previous window.
pub fn impute_offline(data: &Dataset, cfg: &RecoveryConfig) -> Result<(Dataset, RecoveryReport)> {
    let started = Instant::now();
    let plan = window_plan(data.len(), cfg)?;
    let filled = fill_dataset(data, cfg.fill)?;

    let mut out: Vec<Vec<f64>> = data
        .channels()
        .iter()
        .map(|c| c.values().to_vec())
        .collect();
    let mut out_mask: Vec<Vec<bool>> = data.channels().iter().map(|c| c.mask().to_vec()).collect();
    let mut report = RecoveryReport::new(cfg.clone());
    let mut step_times = Vec::with_capacity(plan.windows.len());

    for range in &plan.windows {
        let tick = Instant::now();
        let windows = filled
            .channels()
            .iter()
            .map(|c| (c.id.as_str(), &c.values()[range.clone()]));
        let matrix = stack_windows(windows, cfg.rows, cfg.variant, range.start)?;
        let outcome = osvt_estimate(matrix.entries())?;
        let recovered = reshape_back(&matrix.with_entries(outcome.estimate)?)?;
        for (k, (win, src)) in recovered.iter().zip(data.channels()).enumerate() {
            for (i, &v) in win.values.iter().enumerate() {
                let t = range.start + i;
                if cfg.overwrite_observed || !src.mask()[t] {
                    out[k][t] = v;
                }
                out_mask[k][t] = true;
            }
        }
        report.windows.push(WindowSummary {
            start: range.start,
            len: range.len(),
            kept_rank: outcome.kept_rank,
            threshold: outcome.threshold,
            fallback: outcome.fallback,
        });
        step_times.push(tick.elapsed().as_secs_f64());
    }
    report.passthrough = plan.passthrough;

    let channels = data
        .channels()
        .iter()
        .zip(out.into_iter().zip(out_mask))
        .map(|(c, (values, mask))| ChannelSeries::new(c.id.clone(), c.kind, values, mask))
        .collect::<Result<Vec<_>>>()?;
    let recovered = data.with_channels(channels)?;
    report.timing = Timing::from_steps(started.elapsed().as_secs_f64(), step_times);
    Ok((recovered, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ChannelKind;
    use std::f64::consts::PI;

    fn cfg(l: usize, t: usize) -> RecoveryConfig {
        RecoveryConfig::offline().with_shape(l, t)
    }

    fn two_tone(channels: usize, len: usize) -> Dataset {
        let chans = (0..channels)
            .map(|c| {
                let c_f = c as f64;
                let v = (0..len)
                    .map(|t| {
                        let t = t as f64;
                        1.0 + 0.3 * c_f
                            + (0.5 + 0.1 * c_f) * (2.0 * PI * t / 20.0 + c_f).sin()
                            + (0.3 + 0.05 * c_f) * (2.0 * PI * t / 7.0 + 2.0 * c_f).sin()
                    })
                    .collect();
                ChannelSeries::observed(format!("c{c}"), ChannelKind::Generic, v)
            })
            .collect();
        Dataset::uniform(30.0, chans).unwrap()
    }

    #[test]
    fn plan_page_trims_remainder() {
        let p = window_plan(1234, &cfg(10, 600)).unwrap();
        assert_eq!(p.windows, vec![0..600, 600..1200, 1200..1230]);
        assert_eq!(p.passthrough, Some(1230..1234));
    }

    #[test]
    fn plan_hankel_uses_whole_remainder() {
        let c = cfg(10, 600).with_variant(Variant::Hankel);
        let p = window_plan(1234, &c).unwrap();
        assert_eq!(p.windows.last(), Some(&(1200..1234)));
        assert_eq!(p.passthrough, None);
        let p = window_plan(1205, &c).unwrap();
        assert_eq!(p.windows.len(), 2);
        assert_eq!(p.passthrough, Some(1200..1205));
    }

    #[test]
    fn plan_rejects_short_series() {
        assert!(matches!(
            window_plan(599, &cfg(10, 600)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn noiseless_low_rank_is_reproduced() {
        let data = two_tone(6, 600);
        let (rec, report) = impute_offline(&data, &cfg(10, 600)).unwrap();
        assert_eq!(report.windows.len(), 1);
        for (a, b) in data.channels().iter().zip(rec.channels()) {
            let num: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            let den: f64 = a.values().iter().map(|x| x * x).sum();
            assert!((num / den).sqrt() < 1e-6, "{}", a.id);
        }
    }

    #[test]
    fn restore_keeps_observed_samples() {
        let data = two_tone(3, 300);
        let chans = data
            .channels()
            .iter()
            .map(|c| {
                let mask = (0..c.len()).map(|t| t % 4 != 1).collect();
                let values = c
                    .values()
                    .iter()
                    .zip(&mask)
                    .map(|(&v, &m): (&f64, &bool)| if m { v + 0.01 } else { f64::NAN })
                    .collect();
                ChannelSeries::new(c.id.clone(), c.kind, values, mask).unwrap()
            })
            .collect();
        let gappy = data.with_channels(chans).unwrap();
        let (rec, _) = impute_offline(&gappy, &cfg(10, 100).with_overwrite(false)).unwrap();
        for (a, b) in gappy.channels().iter().zip(rec.channels()) {
            for t in 0..a.len() {
                if a.mask()[t] {
                    assert_eq!(a.values()[t], b.values()[t]);
                } else {
                    assert!(b.values()[t].is_finite());
                }
                assert!(b.mask()[t]);
            }
        }
    }

    #[test]
    fn passthrough_is_untouched() {
        let data = two_tone(2, 605);
        let (rec, report) = impute_offline(&data, &cfg(10, 300)).unwrap();
        assert_eq!(rec.len(), 605);
        assert_eq!(report.passthrough, Some(600..605));
        for (a, b) in data.channels().iter().zip(rec.channels()) {
            assert_eq!(&a.values()[600..], &b.values()[600..]);
        }
    }

    #[test]
    fn all_missing_channel_is_an_error() {
        let chans = vec![
            ChannelSeries::observed("a", ChannelKind::Generic, vec![1.0; 20]),
            ChannelSeries::new(
                "b",
                ChannelKind::Generic,
                vec![f64::NAN; 20],
                vec![false; 20],
            )
            .unwrap(),
        ];
        let data = Dataset::uniform(30.0, chans).unwrap();
        assert!(matches!(
            impute_offline(&data, &cfg(5, 20)),
            Err(Error::AllMissingChannel(id)) if id == "b"
        ));
    }
}
