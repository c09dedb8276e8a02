//! Low-rank matrix estimation by optimal singular value hard thresholding.
//!
//! The observation matrix is mapped affinely onto [-1, 1] using its minimum
//! `a` and maximum `b`, every singular triple of the scaled matrix whose
//! singular value exceeds the closed-form threshold for its aspect ratio is
//! kept, and the truncated matrix is mapped back onto [a, b]. Tall inputs are
//! estimated through their transpose so the short side is always the rows.
//!
//! The spectrum comes from the eigendecomposition of the `m x m` Gram matrix
//! `Y Y^T`; with `m` at most a few tens of rows this costs `O(m^2 n)`, and the
//! estimate is the projection `U_S U_S^T Y`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// `X` mapped onto [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScaled {
    pub scaled: DMatrix<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Every entry equal; `scaled` is then a copy of the input.
    pub constant: bool,
}

pub fn scale_to_unit(x: &DMatrix<f64>) -> Result<UnitScaled> {
    if x.is_empty() {
        return Err(Error::shape("cannot scale an empty matrix"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let lower = x.min();
    let upper = x.max();
    if lower == upper {
        return Ok(UnitScaled {
            scaled: x.clone(),
            lower,
            upper,
            constant: true,
        });
    }
    let mid = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    Ok(UnitScaled {
        scaled: x.map(|v| (v - mid) / half),
        lower,
        upper,
        constant: false,
    })
}

/// Threshold as a function of the aspect ratio `zeta = m / n` in (0, 1].
pub fn threshold_for_ratio(zeta: f64) -> f64 {
    let z1 = zeta + 1.0;
    (2.0 * z1 + 8.0 * zeta / (z1 + (zeta * zeta + 14.0 * zeta + 1.0).sqrt())).sqrt()
}

/// Threshold for an `m x n` matrix.
///
/// # Panics
///
/// If `m == 0` or `m > n`; tall matrices must be handled through their transpose.
pub fn optimal_threshold(m: usize, n: usize) -> f64 {
    assert!(
        m >= 1 && m <= n,
        "optimal_threshold needs 1 <= m <= n, got {m}x{n}"
    );
    threshold_for_ratio(m as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsvtOutcome {
    pub estimate: DMatrix<f64>,
    /// Number of singular triples retained.
    pub kept_rank: usize,
    /// Spectrum of the scaled matrix, descending.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub scale_bounds: (f64, f64),
    /// No singular value exceeded the threshold and the top triple was kept.
    pub fallback: bool,
    /// Input was constant and returned unchanged.
    pub constant: bool,
}

/// Singular values of the scaled (wide-oriented) matrix, descending, with the
/// left singular vectors as columns.
fn spectrum(y: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    debug_assert!(y.nrows() <= y.ncols());
    let gram = y * y.transpose();
    let eig = SymmetricEigen::try_new(gram, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numeric("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sigma = order
        .iter()
        .map(|&k| eig.eigenvalues[k].max(0.0).sqrt())
        .collect();
    let u = DMatrix::from_fn(y.nrows(), order.len(), |i, c| {
        eig.eigenvectors[(i, order[c])]
    });
    Ok((sigma, u))
}

/// Scaled spectrum and threshold of `x` without forming the estimate.
pub fn scaled_spectrum(x: &DMatrix<f64>) -> Result<(Vec<f64>, f64, bool)> {
    let wide = if x.nrows() > x.ncols() {
        x.transpose()
    } else {
        x.clone()
    };
    let unit = scale_to_unit(&wide)?;
    let threshold = optimal_threshold(wide.nrows(), wide.ncols());
    if unit.constant {
        return Ok((Vec::new(), threshold, true));
    }
    let (sigma, _) = spectrum(&unit.scaled)?;
    Ok((sigma, threshold, false))
}

/// Number of scaled singular values strictly above the threshold. A constant
/// matrix has rank 1.
pub fn numerical_rank(x: &DMatrix<f64>) -> Result<usize> {
    let (sigma, threshold, constant) = scaled_spectrum(x)?;
    if constant {
        return Ok(1);
    }
    Ok(sigma.iter().filter(|&&s| s > threshold).count())
}

pub fn osvt_estimate(x: &DMatrix<f64>) -> Result<OsvtOutcome> {
    if x.nrows() > x.ncols() {
        let mut out = estimate_wide(&x.transpose())?;
        out.estimate = out.estimate.transpose();
        return Ok(out);
    }
    estimate_wide(x)
}

fn estimate_wide(x: &DMatrix<f64>) -> Result<OsvtOutcome> {
    let unit = scale_to_unit(x)?;
    let threshold = optimal_threshold(x.nrows(), x.ncols());
    if unit.constant {
        return Ok(OsvtOutcome {
            estimate: x.clone(),
            kept_rank: 1,
            singular_values: Vec::new(),
            threshold,
            scale_bounds: (unit.lower, unit.upper),
            fallback: false,
            constant: true,
        });
    }

    let y = unit.scaled;
    let (sigma, u) = spectrum(&y)?;
    let above = sigma.iter().take_while(|&&s| s > threshold).count();
    let (kept, fallback) = if above == 0 {
        (1, true)
    } else {
        (above, false)
    };

    let basis = u.columns(0, kept);
    let projected = basis * (basis.transpose() * &y);
    let mid = 0.5 * (unit.lower + unit.upper);
    let half = 0.5 * (unit.upper - unit.lower);
    Ok(OsvtOutcome {
        estimate: projected.map(|v| v * half + mid),
        kept_rank: kept,
        singular_values: sigma,
        threshold,
        scale_bounds: (unit.lower, unit.upper),
        fallback,
        constant: false,
    })
}
