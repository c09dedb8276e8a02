//! Reference routines for tests, independent of the library's numerics.

use nalgebra::DMatrix;

/// Singular values by one-sided Jacobi rotations on the columns, descending.
pub fn singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    let mut a = if x.nrows() >= x.ncols() {
        x.clone()
    } else {
        x.transpose()
    };
    let n = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
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

#[test]
fn jacobi_matches_closed_forms() {
    // all-constant c, m x n: single singular value c sqrt(mn)
    let sv = singular_values(&DMatrix::from_element(6, 4, 2.5));
    assert!((sv[0] - 2.5 * 24f64.sqrt()).abs() < 1e-12);
    assert!(sv[1..].iter().all(|&s| s < 1e-12));
    // diagonal
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
    let sv = singular_values(&d);
    assert_eq!(sv, vec![3.0, 2.0, 1.0]);
    // 2x2 closed form: [[1, 1], [0, 1]] has singular values golden ratio +- 1/2
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let sv = singular_values(&g);
    assert!((sv[0] - phi).abs() < 1e-12 && (sv[1] - 1.0 / phi).abs() < 1e-12);
}
