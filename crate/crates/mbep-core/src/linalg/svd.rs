//! Singular values by one-sided Jacobi.
//!
//! Chosen over forming M†M for its relative accuracy on small singular
//! values; rank decisions at relative tolerance 1e-10 need the full gap
//! between genuine and noise-level singular values.

use super::matrix::CMatrix;
use num::complex::Complex64 as C64;

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut a = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.dagger()
    };
    let (rows, cols) = (a.rows(), a.cols());
    if cols == 0 || rows == 0 {
        return vec![];
    }
    let tol = 1e-15;
    for _sweep in 0..40 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C64::new(0.0, 0.0);
                for r in 0..rows {
                    let u = a[(r, p)];
                    let v = a[(r, q)];
                    app += u.norm_sqr();
                    aqq += v.norm_sqr();
                    apq += u.conj() * v;
                }
                let rho = apq.norm();
                if rho <= tol * (app * aqq).sqrt() || rho == 0.0 {
                    continue;
                }
                rotated = true;
                // Smaller-magnitude root of t^2 - 2 zeta t - 1 = 0.
                let zeta = (aqq - app) / (2.0 * rho);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    -zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = apq / rho; // e^{i phi}
                let sx = phase.conj() * s;
                for r in 0..rows {
                    let u = a[(r, p)];
                    let v = a[(r, q)];
                    a[(r, p)] = u * c + v * sx;
                    a[(r, q)] = -u * sx.conj() + v * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|x, y| y.total_cmp(x));
    sigma
}

/// Numerical rank: singular values above `tol * sigma_max * max(rows, cols)`.
/// A zero matrix has rank 0.
pub fn numeric_rank(m: &CMatrix, tol: f64) -> usize {
    assert!(tol >= 0.0, "rank tolerance must be nonnegative");
    let sigma = singular_values(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let threshold = tol * smax * m.rows().max(m.cols()) as f64;
    sigma.iter().filter(|&&s| s > threshold).count()
}

/// Spectral condition number sigma_max / sigma_min (infinite when singular).
pub fn condition_number(m: &CMatrix) -> f64 {
    let sigma = singular_values(m);
    match (sigma.first(), sigma.last()) {
        (Some(&smax), Some(&smin)) if smin > 0.0 => smax / smin,
        (Some(&smax), _) if smax > 0.0 => f64::INFINITY,
        _ => f64::INFINITY,
    }
}

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::Matrix;

    #[test]
    fn singular_values_of_diagonal() {
        let m = CMatrix::from_real_rows(vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1e-12, 0.0],
            vec![0.0, 0.0, 0.5],
        ]);
        let s = singular_values(&m);
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!((s[1] - 0.5).abs() < 1e-14);
        assert!((s[2] - 1e-12).abs() < 1e-24, "tiny sigma to relative accuracy");
    }

    #[test]
    fn rank_of_nilpotent_jordan_block() {
        let mut j = CMatrix::zeros(3, 3);
        j[(0, 1)] = num::complex::Complex64::new(1.0, 0.0);
        j[(1, 2)] = num::complex::Complex64::new(1.0, 0.0);
        assert_eq!(numeric_rank(&j, DEFAULT_RANK_TOL), 2);
        assert_eq!(numeric_rank(&Matrix::zeros(4, 4), DEFAULT_RANK_TOL), 0);
    }

    #[test]
    fn rank_matches_exact_backend_on_liftable_entries() {
        use crate::linalg::exact::{exact_rank, XMatrix};
        let m = CMatrix::from_real_rows(vec![
            vec![0.5, 1.25, 0.75, 2.0],
            vec![1.0, 2.5, 1.5, 4.0],
            vec![0.25, 0.5, -0.125, 1.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(numeric_rank(&m, DEFAULT_RANK_TOL), exact_rank(&XMatrix::lift(&m)));
    }

    #[test]
    fn unitary_invariance_of_singular_values() {
        // Columns rotated by a known unitary keep their norms' invariants.
        let m = CMatrix::from_rows(vec![
            vec![num::complex::Complex64::new(1.0, 2.0), num::complex::Complex64::new(0.0, -1.0)],
            vec![num::complex::Complex64::new(-0.5, 0.3), num::complex::Complex64::new(2.0, 0.0)],
        ]);
        let s = singular_values(&m);
        let frob2: f64 = m.frobenius_norm().powi(2);
        assert!((s.iter().map(|x| x * x).sum::<f64>() - frob2).abs() < 1e-12 * frob2);
    }
}
