//! Scalar abstractions shared by the floating and exact matrix backends.
//!
//! `Ring` is the minimal interface needed by generic matrix/polynomial
//! arithmetic (Kronecker products, characteristic polynomials, Jordan-chain
//! construction). `FieldScalar` adds division for elimination-based routines,
//! and `Conjugate` marks scalars with a complex conjugation.

use num::complex::Complex64 as C64;
use num::traits::{One, Zero};
use std::ops::{Add, Mul, Neg, Sub};

pub trait Ring:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    /// Embed a small integer (chain-coefficient factorials, shifts, ...).
    fn from_i64(v: i64) -> Self;

    /// Embed a small rational; every scalar domain in use contains them.
    fn from_ratio_i64(num: i64, den: i64) -> Self;
}

pub trait FieldScalar: Ring + std::ops::Div<Output = Self> {
    fn inv(&self) -> Self {
        Self::one() / self.clone()
    }
}

pub trait Conjugate: Ring {
    fn conj(&self) -> Self;
    /// The imaginary unit of the scalar domain.
    fn i() -> Self;
}

impl Ring for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio_i64(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl FieldScalar for f64 {}

impl Ring for C64 {
    fn from_i64(v: i64) -> Self {
        C64::new(v as f64, 0.0)
    }
    fn from_ratio_i64(num: i64, den: i64) -> Self {
        C64::new(num as f64 / den as f64, 0.0)
    }
}

impl FieldScalar for C64 {}

impl Conjugate for C64 {
    fn conj(&self) -> Self {
        num::complex::Complex::conj(self)
    }
    fn i() -> Self {
        C64::new(0.0, 1.0)
    }
}
