use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::RecoveryConfig;
use crate::error::{Error, Result};
use crate::matrixify::{reshape_back, stack_windows, StackedMatrix};
use crate::osvt::{osvt_estimate, OsvtOutcome};
use crate::report::{RecoveryReport, Timing, WindowSummary};
use crate::series::{fill_dataset, ChannelSeries, Dataset};

/// Linear map from the first `L - 1` rows of a matrix onto its last row.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub beta: DVector<f64>,
    pub residual_norm: f64,
}

impl ForecastModel {
    /// `beta^T G'` with `G'` the last `L - 1` rows of `matrix`.
    pub fn apply(&self, matrix: &DMatrix<f64>) -> Result<DVector<f64>> {
        let l = matrix.nrows();
        if l != self.beta.len() + 1 {
            return Err(Error::shape(format!(
                "model has {} coefficients, matrix has {l} rows",
                self.beta.len()
            )));
        }
        let g_next = matrix.rows(1, l - 1);
        Ok(g_next.tr_mul(&self.beta))
    }
}

/// Minimum-norm least squares fit of `H = G^T beta` over the columns, where
/// `G` is rows `0..L-1` and `H` the last row. Singular values of `G` below
/// `eps * max(dims) * sigma_max` are treated as zero.
pub fn learn_forecast(matrix: &DMatrix<f64>) -> Result<ForecastModel> {
    let (l, c) = matrix.shape();
    if l < 2 {
        return Err(Error::shape(format!("need at least 2 rows, got {l}")));
    }
    if c < 1 {
        return Err(Error::shape("need at least one column"));
    }
    let a = matrix.rows(0, l - 1).transpose();
    let h: DVector<f64> = matrix.row(l - 1).transpose();
    let beta = min_norm_lstsq(&a, &h)?;
    let residual_norm = (&a * &beta - h).norm();
    Ok(ForecastModel {
        beta,
        residual_norm,
    })
}

/// Pseudoinverse solution of `a x = b`.
///
/// `a = Q R` first, then the singular triples of the small factor `R` come
/// from the symmetric eigenproblem `[[0, R], [R^T, 0]]`, whose eigenvalues
/// are `+-sigma` with eigenvectors `(u; v) / sqrt(2)`. Unlike `R^T R` this
/// does not square the condition number.
fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let qb = q.tr_mul(b);
    let p = r.nrows();
    let mut aug = DMatrix::zeros(p + n, p + n);
    aug.view_mut((0, p), (p, n)).copy_from(&r);
    aug.view_mut((p, 0), (n, p)).copy_from(&r.transpose());
    let eig = SymmetricEigen::try_new(aug, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("least squares eigensolver did not converge".into()))?;
    let sigma_max = eig.eigenvalues.max();
    let mut x = DVector::zeros(n);
    if sigma_max <= 0.0 {
        return Ok(x);
    }
    let cutoff = f64::EPSILON * m.max(n) as f64 * sigma_max;
    for (k, &sigma) in eig.eigenvalues.iter().enumerate() {
        if sigma > cutoff {
            let w = eig.eigenvectors.column(k);
            let u = w.rows(0, p);
            let v = w.rows(p, n);
            // u and v each have norm 1/sqrt(2)
            x += v * (2.0 * u.dot(&qb) / sigma);
        }
    }
    Ok(x)
}

/// One online step on already-filled windows: estimate, optionally restore
/// observed samples, fit (or reuse) the model and forecast every channel.
fn forecast_step(
    window: &Dataset,
    cfg: &RecoveryConfig,
    model: Option<&ForecastModel>,
) -> Result<(Vec<f64>, OsvtOutcome, Option<ForecastModel>)> {
    let windows = window
        .channels()
        .iter()
        .map(|c| (c.id.as_str(), c.values()));
    let matrix = stack_windows(windows, cfg.rows, cfg.variant, 0)?;
    let outcome = osvt_estimate(matrix.entries())?;
    let denoised = if cfg.overwrite_observed {
        outcome.estimate.clone()
    } else {
        restore_observed(&matrix, &outcome.estimate, window, cfg)?
    };
    let fresh = match model {
        Some(_) => None,
        None => Some(learn_forecast(&denoised)?),
    };
    let used = model.or(fresh.as_ref()).expect("model present");
    let next = used.apply(&denoised)?;
    let predictions = matrix
        .blocks()
        .iter()
        .map(|b| next[b.columns.end - 1])
        .collect();
    Ok((predictions, outcome, fresh))
}

fn restore_observed(
    matrix: &StackedMatrix,
    estimate: &DMatrix<f64>,
    window: &Dataset,
    cfg: &RecoveryConfig,
) -> Result<DMatrix<f64>> {
    let recovered = reshape_back(&matrix.with_entries(estimate.clone())?)?;
    let merged: Vec<Vec<f64>> = recovered
        .into_iter()
        .zip(window.channels())
        .map(|(w, c)| {
            w.values
                .iter()
                .zip(c.values().iter().zip(c.mask()))
                .map(|(&est, (&obs, &m))| if m { obs } else { est })
                .collect()
        })
        .collect();
    let ids = window.channels().iter().map(|c| c.id.as_str());
    let rebuilt = stack_windows(
        ids.zip(merged.iter().map(Vec::as_slice)),
        cfg.rows,
        cfg.variant,
        0,
    )?;
    Ok(rebuilt.into_entries())
}

fn check_window(window: &Dataset, cfg: &RecoveryConfig) -> Result<()> {
    cfg.validate()?;
    if window.len() != cfg.window {
        return Err(Error::shape(format!(
            "prediction window has {} samples, expected T={}",
            window.len(),
            cfg.window
        )));
    }
    Ok(())
}

/// Forecast the sample following `window` (exactly `T` samples) on every channel.
pub fn predict_next(window: &Dataset, cfg: &RecoveryConfig) -> Result<Vec<f64>> {
    check_window(window, cfg)?;
    let filled = fill_dataset(window, cfg.fill)?;
    Ok(forecast_step(&filled, cfg, None)?.0)
}

/// Slide a window of `T` samples along the stream one sample at a time and
/// forecast the next sample at every position. The output holds one row per
/// forecast, time-stamped with the forecast instant.
///
/// Unobserved samples are filled once over the stream by carrying the last
/// observation forward, so every window sees only past values (a leading gap
/// is backfilled from the first observation).
pub fn predict_stream(data: &Dataset, cfg: &RecoveryConfig) -> Result<(Dataset, RecoveryReport)> {
    cfg.validate()?;
    let t = cfg.window;
    if data.len() <= t {
        return Err(Error::shape(format!(
            "stream has {} samples, need more than T={t}",
            data.len()
        )));
    }
    let started = Instant::now();
    let filled = fill_dataset(data, cfg.fill)?;
    let steps = data.len() - t;
    let mut preds = vec![Vec::with_capacity(steps); data.channel_count()];
    let mut report = RecoveryReport::new(cfg.clone());
    let mut step_times = Vec::with_capacity(steps);
    let mut model: Option<ForecastModel> = None;

    for j in 0..steps {
        let window = filled.slice(j..j + t);
        let tick = Instant::now();
        let reuse = if j % cfg.refresh_every == 0 {
            None
        } else {
            model.as_ref()
        };
        let (next, outcome, fresh) = forecast_step(&window, cfg, reuse)?;
        step_times.push(tick.elapsed().as_secs_f64());
        if fresh.is_some() {
            model = fresh;
        }
        for (p, v) in preds.iter_mut().zip(next) {
            p.push(v);
        }
        report.windows.push(WindowSummary {
            start: j,
            len: t,
            kept_rank: outcome.kept_rank,
            threshold: outcome.threshold,
            fallback: outcome.fallback,
        });
    }

    let channels = data
        .channels()
        .iter()
        .zip(preds)
        .map(|(c, v)| ChannelSeries::observed(c.id.clone(), c.kind, v))
        .collect();
    let out = Dataset::new(data.timestamps()[t..].to_vec(), data.rate_fps(), channels)?;
    report.timing = Timing::from_steps(started.elapsed().as_secs_f64(), step_times);
    Ok((out, report))
}
