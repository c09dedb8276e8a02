#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use pmu_recovery::harness::{degrade, mape, DegradeSpec};
use pmu_recovery::matrixify::{hankel_matrix, page_matrix, reshape_back};
use pmu_recovery::osvt::osvt_estimate;
use pmu_recovery::series::{fill_missing, ChannelKind, ChannelSeries, Dataset, FillPolicy};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    let mut a = if x.nrows() >= x.ncols() {
        x.clone()
    } else {
        x.transpose()
    };
    let n = a.ncols();
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let (ap, aq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Six (or `channels`) channels sharing two tones with periods of 20 and 7
/// samples, distinct offsets, gains and phases.
pub fn two_tone(channels: usize, len: usize) -> Dataset {
    let chans = (0..channels)
        .map(|c| {
            let cf = c as f64;
            let v = (0..len)
                .map(|t| {
                    let t = t as f64;
                    1.0 + 0.3 * cf
                        + (0.5 + 0.1 * cf) * (2.0 * PI * t / 20.0 + cf).sin()
                        + (0.3 + 0.05 * cf) * (2.0 * PI * t / 7.0 + 2.0 * cf).sin()
                })
                .collect();
            ChannelSeries::observed(format!("ch{c}"), ChannelKind::Generic, v)
        })
        .collect();
    Dataset::uniform(30.0, chans).unwrap()
}

/// `f(t) = 1.8 f(t-1) - 0.81 f(t-2)`, `f(0) = f(1) = 1`, by direct recursion.
pub fn lrf(len: usize) -> Vec<f64> {
    let mut f = vec![1.0, 1.0];
    while f.len() < len {
        let n = f.len();
        f.push(1.8 * f[n - 1] - 0.81 * f[n - 2]);
    }
    f.truncate(len);
    f
}

pub fn single(id: &str, values: Vec<f64>) -> Dataset {
    Dataset::uniform(
        30.0,
        vec![ChannelSeries::observed(id, ChannelKind::Generic, values)],
    )
    .unwrap()
}

pub fn rel_rms(truth: &[f64], est: &[f64]) -> f64 {
    let num: f64 = truth.iter().zip(est).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = truth.iter().map(|a| a * a).sum();
    (num / den).sqrt()
}

// ---- invariant checks shared by the property tests and the acceptance run

pub fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..8, 2usize..40).prop_flat_map(|(r, c)| {
        prop::collection::vec(-100.0f64..100.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

pub fn series_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter("needs one observation", |(_, m)| m.iter().any(|&b| b))
    })
}

pub fn window_strategy() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..8, 1usize..30)
        .prop_flat_map(|(l, k)| (prop::collection::vec(-1e3f64..1e3, l * k), Just(l)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn check_transpose(x: &DMatrix<f64>) -> Result<(), TestCaseError> {
    let a = osvt_estimate(x).unwrap();
    let b = osvt_estimate(&x.transpose()).unwrap();
    let scale = x.amax().max(1.0);
    prop_assert_eq!(a.kept_rank, b.kept_rank);
    let diff = (&a.estimate - b.estimate.transpose()).amax();
    prop_assert!(diff <= 1e-9 * scale, "transpose mismatch {}", diff);
    Ok(())
}

pub fn check_shift(x: &DMatrix<f64>, c: f64) -> Result<(), TestCaseError> {
    let a = osvt_estimate(x).unwrap();
    let b = osvt_estimate(&x.add_scalar(c)).unwrap();
    let scale = x.amax().max(c.abs()).max(1.0);
    prop_assert_eq!(a.kept_rank, b.kept_rank);
    let diff = (&a.estimate.add_scalar(c) - &b.estimate).amax();
    prop_assert!(diff <= 1e-9 * scale, "shift mismatch {}", diff);
    Ok(())
}

pub fn check_fill(values: &[f64], mask: &[bool]) -> Result<(), TestCaseError> {
    let values: Vec<f64> = values
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v } else { f64::NAN })
        .collect();
    let s = ChannelSeries::new("x", ChannelKind::Generic, values.clone(), mask.to_vec()).unwrap();
    let f = fill_missing(&s, FillPolicy::LastObservationCarriedForward).unwrap();
    prop_assert_eq!(f.mask(), s.mask());
    for (t, (&v, &m)) in values.iter().zip(mask).enumerate() {
        if m {
            prop_assert_eq!(f.values()[t].to_bits(), v.to_bits());
        } else {
            prop_assert!(f.values()[t].is_finite());
        }
    }
    Ok(())
}

pub fn check_page_round_trip(window: &[f64], rows: usize) -> Result<(), TestCaseError> {
    let m = page_matrix(window, rows).unwrap().labelled("w", 0);
    let back = reshape_back(&m).unwrap();
    prop_assert_eq!(back.len(), 1);
    prop_assert_eq!(&back[0].values, &window.to_vec());
    Ok(())
}

pub fn check_hankel_round_trip(window: &[f64], rows: usize) -> Result<(), TestCaseError> {
    let m = hankel_matrix(window, rows).unwrap().labelled("w", 0);
    let back = reshape_back(&m).unwrap();
    for (a, b) in back[0].values.iter().zip(window) {
        prop_assert!(close(*a, *b, 1e-12 * b.abs().max(1.0)), "{} vs {}", a, b);
    }
    Ok(())
}

pub fn check_degrade_determinism(
    len: usize,
    drop: f64,
    noise: f64,
    seed: u64,
) -> Result<(), TestCaseError> {
    let truth = two_tone(3, len);
    let before = serde_json::to_string(&truth).unwrap();
    let spec = DegradeSpec::new(drop, noise, seed);
    let a = degrade(&truth, &spec).unwrap();
    let b = degrade(&truth, &spec).unwrap();
    prop_assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    prop_assert_eq!(serde_json::to_string(&truth).unwrap(), before);
    let expected = (drop * len as f64).round() as usize;
    let first = a.channels()[0].mask().to_vec();
    prop_assert_eq!(first.iter().filter(|&&m| !m).count(), expected);
    for (c, t) in a.channels().iter().zip(truth.channels()) {
        prop_assert_eq!(c.mask(), &first[..]);
        if noise == 0.0 {
            for i in 0..len {
                if c.mask()[i] {
                    prop_assert_eq!(c.values()[i], t.values()[i]);
                }
            }
        }
    }
    Ok(())
}

pub fn check_mape_scale(truth: &[f64], est: &[f64], c: f64) -> Result<(), TestCaseError> {
    let (m, x) = mape(truth, est).unwrap();
    let ct: Vec<f64> = truth.iter().map(|v| v * c).collect();
    let ce: Vec<f64> = est.iter().map(|v| v * c).collect();
    let (mc, xc) = mape(&ct, &ce).unwrap();
    prop_assert_eq!(x, xc);
    prop_assert!(close(m, mc, 1e-12 * m.max(1.0)), "{} vs {}", m, mc);
    let (z, _) = mape(truth, truth).unwrap();
    prop_assert_eq!(z, 0.0);
    Ok(())
}

pub fn nonzero_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![-100.0f64..-0.01, 0.01f64..100.0], n),
            prop::collection::vec(-100.0f64..100.0, n),
            prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
        )
    })
}
