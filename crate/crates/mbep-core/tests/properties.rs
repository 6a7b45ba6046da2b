//! Property tests for the structural invariants.

use mbep_core::jordan::conjugate_partition;
use mbep_core::linalg::{
    exact_rank, numeric_rank, CMatrix, Matrix, XMatrix, DEFAULT_RANK_TOL,
};
use mbep_core::model::{unvectorize, vectorize};
use num::complex::Complex64 as C64;
use proptest::prelude::*;

fn small_complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(small_complex(), rows * cols)
        .prop_map(move |data| CMatrix::from_fn(rows, cols, |r, c| data[r * cols + c]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Mixed-product identity (A x B)(C x D) = AC x BD.
    #[test]
    fn kron_mixed_product(
        a in matrix(2, 3), c in matrix(3, 2),
        b in matrix(3, 2), d in matrix(2, 3),
    ) {
        let lhs = a.kron(&b).matmul(&c.kron(&d));
        let rhs = a.matmul(&c).kron(&b.matmul(&d));
        prop_assert!(lhs.sub(&rhs).frobenius_norm() < 1e-12);
    }

    /// Vectorization round trip.
    #[test]
    fn vectorize_round_trip(m in matrix(3, 3)) {
        let back = unvectorize(&vectorize(&m)).unwrap();
        prop_assert_eq!(back, m);
    }

    /// Conjugation is an involution on sorted partitions.
    #[test]
    fn conjugate_partition_involution(parts in proptest::collection::vec(1usize..6, 1..5)) {
        let mut p = parts;
        p.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(conjugate_partition(&conjugate_partition(&p)), p);
    }

    /// Numeric and exact ranks agree whenever entries lift exactly,
    /// including planted low-rank structure.
    #[test]
    fn numeric_rank_matches_exact_on_dyadic_entries(
        u in proptest::collection::vec(-8i32..8, 4),
        v in proptest::collection::vec(-8i32..8, 4),
        w in proptest::collection::vec(-8i32..8, 4),
        x in proptest::collection::vec(-8i32..8, 4),
    ) {
        // Rank <= 2 matrix from dyadic-rational outer products.
        let m = CMatrix::from_fn(4, 4, |r, c| {
            C64::new(
                u[r] as f64 * v[c] as f64 / 4.0 + w[r] as f64 * x[c] as f64 / 8.0,
                u[r] as f64 * x[c] as f64 / 2.0 - w[r] as f64 * v[c] as f64 / 4.0,
            )
        });
        let exact = exact_rank(&XMatrix::lift(&m));
        prop_assert_eq!(numeric_rank(&m, DEFAULT_RANK_TOL), exact);
        prop_assert!(exact <= 2);
    }

    /// Kronecker-sum trace identity.
    #[test]
    fn kron_sum_trace(a in matrix(2, 2), b in matrix(3, 3)) {
        let k = mbep_core::linalg::kron_sum(&a, &b).unwrap();
        let want = a.trace() * C64::new(3.0, 0.0) + b.trace() * C64::new(2.0, 0.0);
        prop_assert!((k.trace() - want).norm() < 1e-12);
    }
}

// Matrix is used through CMatrix::from_fn above.
#[allow(unused_imports)]
use Matrix as _;
