//! Dense least-squares plumbing shared by the calibration solvers.

use nalgebra::{DMatrix, DVector};

/// Minimize `||a x - b||` for a tall dense system via thin QR.
///
/// Returns `None` when the triangular factor is numerically singular; callers
/// gate on their own rank diagnostics before getting here, so `None` signals
/// geometry the diagnostics missed.
pub(crate) fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    debug_assert!(a.nrows() >= a.ncols());
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let diag_min = r
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if diag_max <= 0.0 || diag_min / diag_max < 1e-12 {
        return None;
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb)
}

/// Singular values of `a` in descending order.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let svd = a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    sv
}

/// Smallest singular value divided by the largest; 0 for an all-zero matrix.
pub(crate) fn normalized_min_singular_value(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_exact_solution() {
        // overdetermined consistent system
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let x_true = DVector::from_vec(vec![3.0, -2.0]);
        let b = &a * &x_true;
        let x = solve_least_squares(&a, &b).unwrap();
        assert!((x - x_true).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_system_is_detected() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0, -1.0, -2.0]);
        assert!(normalized_min_singular_value(&a) < 1e-12);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, -1.0]);
        assert!(solve_least_squares(&a, &b).is_none());
    }
}
