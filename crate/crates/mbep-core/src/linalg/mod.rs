//! Dense complex linear algebra with two scalar backends: floating complex
//! (`CMatrix`) and exact complex-rational (`XMatrix`).

pub mod eig;
pub mod exact;
pub mod expm;
pub mod matrix;
pub mod poly;
pub mod scalar;
pub mod svd;

pub use eig::{eig, poly_roots, EigenSystem};
pub use exact::{exact_rank, small_rational_from_f64, ExactComplex, XMatrix};
pub use expm::matrix_exp;
pub use matrix::{vec_dot, vec_kron, vec_norm, CMatrix, Matrix};
pub use poly::Poly;
pub use scalar::{Conjugate, FieldScalar, Ring};
pub use svd::{condition_number, numeric_rank, singular_values, DEFAULT_RANK_TOL};

use crate::error::Result;

/// Kronecker sum `a ⊗ I + I ⊗ b` of two square matrices.
pub fn kron_sum<T: Ring>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let na = a.require_square()?;
    let nb = b.require_square()?;
    let ia = Matrix::<T>::identity(na);
    let ib = Matrix::<T>::identity(nb);
    Ok(a.kron(&ib).add(&ia.kron(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::complex::Complex64 as C64;

    #[test]
    fn kron_sum_of_diagonals_adds_eigenvalues() {
        let a = CMatrix::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = CMatrix::from_real_rows(vec![vec![10.0, 0.0], vec![0.0, 20.0]]);
        let k = kron_sum(&a, &b).unwrap();
        let mut diag: Vec<f64> = (0..4).map(|i| k[(i, i)].re).collect();
        diag.sort_by(f64::total_cmp);
        assert_eq!(diag, vec![11.0, 12.0, 21.0, 22.0]);
    }

    #[test]
    fn kron_sum_trace_identity() {
        let a = CMatrix::from_rows(vec![
            vec![C64::new(0.4, 0.1), C64::new(0.2, 0.0)],
            vec![C64::new(0.0, -0.3), C64::new(-1.0, 0.2)],
        ]);
        let b = CMatrix::from_rows(vec![
            vec![C64::new(1.5, 0.0), C64::new(0.0, 0.7), C64::new(0.1, 0.0)],
            vec![C64::new(0.3, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -0.2)],
            vec![C64::new(0.0, 0.0), C64::new(0.9, 0.0), C64::new(-0.4, 0.6)],
        ]);
        let k = kron_sum(&a, &b).unwrap();
        let want = a.trace() * C64::new(3.0, 0.0) + b.trace() * C64::new(2.0, 0.0);
        assert!((k.trace() - want).norm() < 1e-14);
    }

    #[test]
    fn kron_sum_rejects_non_square() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::identity(2);
        assert!(kron_sum(&a, &b).is_err());
    }

    #[test]
    fn kron_sum_of_nilpotent_pair_has_segre_3_1() {
        // J_2(0) (+) J_2(0): single eigenvalue 0, kernel staircase 2, 1, 1.
        let mut j = CMatrix::zeros(2, 2);
        j[(0, 1)] = C64::new(1.0, 0.0);
        let k = kron_sum(&j, &j).unwrap();
        let r1 = numeric_rank(&k, DEFAULT_RANK_TOL);
        let r2 = numeric_rank(&k.matmul(&k), DEFAULT_RANK_TOL);
        let r3 = numeric_rank(&k.matmul(&k).matmul(&k), DEFAULT_RANK_TOL);
        assert_eq!((r1, r2, r3), (2, 1, 0)); // weyr (2,1,1) -> segre [3,1]
    }
}
