//! Exact complex-rational arithmetic: the oracle backend.
//!
//! Entries are pairs of arbitrary-precision rationals. All arithmetic is
//! closed (no rounding); conversion to floating point happens only at the
//! boundary, never inside exact algorithms.

use super::matrix::Matrix;
use super::scalar::{Conjugate, FieldScalar, Ring};
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::complex::Complex64 as C64;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

pub type XMatrix = Matrix<ExactComplex>;

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ExactComplex { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        ExactComplex {
            re,
            im: BigRational::zero(),
        }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        ExactComplex {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0);
        ExactComplex::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact lift of a double (every finite f64 is a dyadic rational).
    pub fn from_f64_exact(re: f64, im: f64) -> Self {
        ExactComplex {
            re: BigRational::from_float(re).expect("finite"),
            im: BigRational::from_float(im).expect("finite"),
        }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

/// Accurate `BigRational -> f64`: shifts the numerator so the integer
/// quotient carries >= 64 significant bits, then scales back by an exact
/// power of two. Relative error is at the rounding level of f64.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let shift = (den.bits() as i64 - num.bits() as i64 + 64).max(0) as u64;
    let q = (num << shift) / den;
    let q_f = q.to_f64().unwrap_or(f64::NAN);
    q_f * 2f64.powi(-(shift as i32))
}

/// Best small-rational reconstruction of an f64 by continued fractions.
///
/// Succeeds only when a fraction with denominator <= 10^4 reproduces the
/// value to a few ulps; used to recover intended parameter values like
/// 0.2 -> 1/5 when entering exact computations from floating input.
pub fn small_rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::IrrationalParameter { value: x });
    }
    if x == 0.0 {
        return Ok(BigRational::zero());
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(BigRational::new(BigInt::from(p1), BigInt::from(q1)));
        }
        if frac == 0.0 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > 10_000 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    Err(Error::IrrationalParameter { value: x })
}

impl Zero for ExactComplex {
    fn zero() -> Self {
        ExactComplex::real(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for ExactComplex {
    fn one() -> Self {
        ExactComplex::real(BigRational::one())
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ExactComplex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ExactComplex::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        ExactComplex::new(-self.re, -self.im)
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        ExactComplex::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Div for ExactComplex {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        assert!(!d.is_zero(), "exact division by zero");
        ExactComplex::new(
            (&self.re * &o.re + &self.im * &o.im) / &d,
            (&self.im * &o.re - &self.re * &o.im) / &d,
        )
    }
}

impl Ring for ExactComplex {
    fn from_i64(v: i64) -> Self {
        ExactComplex::from_ints(v, 0)
    }
    fn from_ratio_i64(num: i64, den: i64) -> Self {
        ExactComplex::from_ratio(num, den)
    }
}

impl FieldScalar for ExactComplex {}

impl Conjugate for ExactComplex {
    fn conj(&self) -> Self {
        ExactComplex::new(self.re.clone(), -self.im.clone())
    }
    fn i() -> Self {
        ExactComplex::from_ints(0, 1)
    }
}

impl XMatrix {
    /// Exact lift of a floating matrix (bit-exact, no rounding).
    pub fn lift(m: &super::matrix::CMatrix) -> Self {
        m.map(|z| ExactComplex::from_f64_exact(z.re, z.im))
    }

    pub fn to_cmatrix(&self) -> super::matrix::CMatrix {
        self.map(|x| x.to_c64())
    }
}

/// Rank by fraction-free (Bareiss) Gaussian elimination over the Gaussian
/// integers, after clearing denominators row-wise. Exact.
pub fn exact_rank(m: &XMatrix) -> usize {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return 0;
    }
    // Clear denominators per row (rank-preserving row scaling).
    let mut a: Vec<Vec<(BigInt, BigInt)>> = (0..rows)
        .map(|r| {
            let mut l = BigInt::one();
            for c in 0..cols {
                let e = &m[(r, c)];
                l = num::integer::lcm(num::integer::lcm(l, e.re.denom().clone()), e.im.denom().clone());
            }
            (0..cols)
                .map(|c| {
                    let e = &m[(r, c)];
                    (
                        e.re.numer() * (&l / e.re.denom()),
                        e.im.numer() * (&l / e.im.denom()),
                    )
                })
                .collect()
        })
        .collect();

    let gmul = |x: &(BigInt, BigInt), y: &(BigInt, BigInt)| -> (BigInt, BigInt) {
        (&x.0 * &y.0 - &x.1 * &y.1, &x.0 * &y.1 + &x.1 * &y.0)
    };
    // Exact division in Z[i]; valid whenever den | num, as in Bareiss steps.
    let gdiv = |num: &(BigInt, BigInt), den: &(BigInt, BigInt)| -> (BigInt, BigInt) {
        let n2 = &den.0 * &den.0 + &den.1 * &den.1;
        let conj = (den.0.clone(), -den.1.clone());
        let p = gmul(num, &conj);
        debug_assert!((&p.0 % &n2).is_zero() && (&p.1 % &n2).is_zero());
        (&p.0 / &n2, &p.1 / &n2)
    };
    let is_zero = |x: &(BigInt, BigInt)| x.0.is_zero() && x.1.is_zero();

    let mut col_of: Vec<usize> = (0..cols).collect();
    let mut prev = (BigInt::one(), BigInt::zero());
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        // Find any nonzero pivot in the trailing submatrix.
        let mut pivot = None;
        'search: for i in k..rows {
            for j in k..cols {
                if !is_zero(&a[i][col_of[j]]) {
                    pivot = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((pi, pj)) = pivot else {
            return rank;
        };
        a.swap(k, pi);
        col_of.swap(k, pj);
        for i in k + 1..rows {
            for j in k + 1..cols {
                let t = gmul(&a[k][col_of[k]], &a[i][col_of[j]]);
                let u = gmul(&a[i][col_of[k]], &a[k][col_of[j]]);
                let d = (&t.0 - &u.0, &t.1 - &u.1);
                a[i][col_of[j]] = gdiv(&d, &prev);
            }
            a[i][col_of[k]] = (BigInt::zero(), BigInt::zero());
        }
        prev = a[k][col_of[k]].clone();
        rank = k + 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xc(nr: i64, dr: i64, ni: i64, di: i64) -> ExactComplex {
        ExactComplex::new(
            BigRational::new(BigInt::from(nr), BigInt::from(dr)),
            BigRational::new(BigInt::from(ni), BigInt::from(di)),
        )
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        assert_eq!(exact_rank(&XMatrix::zeros(3, 4)), 0);
    }

    #[test]
    fn rank_of_nilpotent_block() {
        // J_3(0): rank 2.
        let mut j = XMatrix::zeros(3, 3);
        j[(0, 1)] = ExactComplex::one();
        j[(1, 2)] = ExactComplex::one();
        assert_eq!(exact_rank(&j), 2);
    }

    #[test]
    fn rank_of_outer_product_sum() {
        // Two independent rank-1 terms with rational complex entries.
        let u1 = [xc(1, 2, 0, 1), xc(0, 1, 1, 3), xc(-2, 1, 0, 1), xc(1, 1, 1, 1)];
        let v1 = [xc(1, 1, 0, 1), xc(2, 5, -1, 2), xc(0, 1, 0, 1), xc(3, 7, 0, 1)];
        let u2 = [xc(0, 1, 1, 1), xc(1, 4, 0, 1), xc(1, 1, -1, 5), xc(0, 1, 2, 3)];
        let v2 = [xc(1, 3, 1, 1), xc(0, 1, 0, 1), xc(5, 2, 0, 1), xc(-1, 6, 1, 2)];
        let m = XMatrix::from_fn(4, 4, |i, j| {
            u1[i].clone() * v1[j].clone() + u2[i].clone() * v2[j].clone()
        });
        assert_eq!(exact_rank(&m), 2);
    }

    #[test]
    fn field_ops_roundtrip() {
        let a = xc(3, 7, -2, 5);
        let b = xc(-1, 3, 4, 9);
        let q = a.clone() / b.clone();
        assert_eq!(q * b, a);
    }

    #[test]
    fn ratio_to_f64_handles_big_values() {
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((ratio_to_f64(&r) - 1.0 / 3.0).abs() < 1e-16);
        let big = BigRational::new(BigInt::from(10i64).pow(30), BigInt::from(3));
        assert!((ratio_to_f64(&big) - 1e30 / 3.0).abs() / (1e30 / 3.0) < 1e-15);
        let lifted = BigRational::from_float(0.1).unwrap();
        assert_eq!(ratio_to_f64(&lifted), 0.1);
    }

    #[test]
    fn small_rational_recovers_decimals() {
        assert_eq!(
            small_rational_from_f64(0.2).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(5))
        );
        assert_eq!(
            small_rational_from_f64(0.175).unwrap(),
            BigRational::new(BigInt::from(7), BigInt::from(40))
        );
        assert!(small_rational_from_f64(0.2 / std::f64::consts::SQRT_2).is_err());
    }
}
