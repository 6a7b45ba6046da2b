//! Exact characteristic polynomials in a symbolic jump rate.
//!
//! Matrices are built over `Poly<ExactComplex>` (polynomials in the rate) and
//! the characteristic polynomial comes from the Faddeev-LeVerrier recursion,
//! which stays inside exact rational arithmetic. Eigenvalues at a concrete
//! rational rate are recovered from the substituted univariate polynomial via
//! the companion matrix, then Newton-refined with exact Horner evaluation so
//! the only residual error is the f64 representation of the root itself.

use crate::error::{Error, Result};
use crate::linalg::{
    kron_sum, poly_roots, CMatrix, Conjugate, ExactComplex, Matrix, Poly, Ring,
};
use crate::model::{build_matrices, SystemParams};
use num::complex::Complex64 as C64;
use num::rational::BigRational;
use num::traits::{One, Zero};

pub type RatePoly = Poly<ExactComplex>;
pub type RateMatrix = Matrix<RatePoly>;

impl Conjugate for RatePoly {
    fn conj(&self) -> Self {
        Poly::new(self.coeffs().iter().map(|c| Conjugate::conj(c)).collect())
    }
    fn i() -> Self {
        Poly::constant(ExactComplex::i())
    }
}

/// Monic bivariate characteristic polynomial: coefficients `a_k` of
/// `lambda^(n-k)` are exact polynomials in the rate, `a_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaPolynomial {
    /// Ascending powers of lambda; length n+1, leading coefficient one.
    lambda_coeffs: Poly<RatePoly>,
}

impl GammaPolynomial {
    pub fn from_lambda_poly(p: Poly<RatePoly>) -> Result<Self> {
        if !p.is_monic() {
            return Err(Error::InvalidSpec("polynomial must be monic in lambda".into()));
        }
        Ok(GammaPolynomial { lambda_coeffs: p })
    }

    /// Faddeev-LeVerrier over exact rate polynomials.
    pub fn char_poly(m: &RateMatrix) -> Result<Self> {
        let n = m.require_square()?;
        let id: RateMatrix = Matrix::identity(n);
        let mut mk: RateMatrix = Matrix::zeros(n, n);
        let mut cs: Vec<RatePoly> = vec![Poly::one()];
        for k in 1..=n {
            mk = m.matmul(&mk.add(&id.scale(cs.last().unwrap())));
            let ck = (-mk.trace()).scale(&ExactComplex::from_ratio_i64(1, k as i64));
            cs.push(ck);
        }
        // lambda^n + c_1 lambda^(n-1) + ... + c_n, ascending order.
        let mut ascending: Vec<RatePoly> = cs.into_iter().rev().collect();
        debug_assert!(ascending.last().unwrap().is_one());
        let _ = &mut ascending;
        GammaPolynomial::from_lambda_poly(Poly::new(ascending))
    }

    pub fn degree(&self) -> usize {
        self.lambda_coeffs.degree().expect("monic polynomial is nonzero")
    }

    /// Coefficient of `lambda^(degree - k)`.
    pub fn a_coeff(&self, k: usize) -> RatePoly {
        self.lambda_coeffs.coeff(self.degree() - k)
    }

    /// Lowest rate-order term of `a_k`: `(beta_k, alpha_k)`, or `None` when
    /// `a_k` vanishes identically.
    pub fn leading_order(&self, k: usize) -> Option<(usize, ExactComplex)> {
        let a = self.a_coeff(k);
        let val = a.valuation()?;
        Some((val, a.coeff(val)))
    }

    pub fn lambda_poly(&self) -> &Poly<RatePoly> {
        &self.lambda_coeffs
    }

    /// Exact division by a monic-in-lambda factor; errors unless the
    /// remainder vanishes identically.
    pub fn divide_exact(&self, divisor: &GammaPolynomial) -> Result<GammaPolynomial> {
        let (q, r) = self.lambda_coeffs.div_rem_monic(&divisor.lambda_coeffs);
        if !r.is_zero() {
            return Err(Error::Numeric(
                "polynomial division left a nonzero remainder".into(),
            ));
        }
        GammaPolynomial::from_lambda_poly(q)
    }

    /// Substitute an exact rate value, leaving a univariate polynomial in
    /// lambda (ascending exact coefficients).
    pub fn substitute_rate(&self, rate: &BigRational) -> Vec<ExactComplex> {
        let g = ExactComplex::real(rate.clone());
        self.lambda_coeffs
            .coeffs()
            .iter()
            .map(|a| a.eval(&g))
            .collect()
    }
}

/// Roots of a monic polynomial with exact coefficients (ascending): companion
/// eigenvalues polished by Newton steps evaluated in exact arithmetic.
pub fn exact_poly_roots(coeffs: &[ExactComplex]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(vec![]);
    }
    if !coeffs[n].is_one() {
        return Err(Error::InvalidSpec("expected a monic polynomial".into()));
    }
    let poly = Poly::new(coeffs.to_vec());
    let deriv = poly.derivative();
    let float: Vec<C64> = coeffs.iter().map(|c| c.to_c64()).collect();
    let mut roots = poly_roots(&float)?;
    for z in roots.iter_mut() {
        let mut best = *z;
        let mut best_val = f64::INFINITY;
        let mut cur = *z;
        for _ in 0..10 {
            let zx = ExactComplex::from_f64_exact(cur.re, cur.im);
            let val = poly.eval(&zx).to_c64();
            if val.norm() < best_val {
                best_val = val.norm();
                best = cur;
            }
            let dv = deriv.eval(&zx).to_c64();
            if dv.norm() == 0.0 || !val.is_finite() {
                break;
            }
            let step = val / dv;
            cur -= step;
            if step.norm() <= 1e-16 * cur.norm().max(1.0) {
                let zx = ExactComplex::from_f64_exact(cur.re, cur.im);
                let val = poly.eval(&zx).to_c64().norm();
                if val < best_val {
                    best = cur;
                }
                break;
            }
        }
        *z = best;
    }
    Ok(roots)
}

/// Exact system parameters with the intra-jump rate left symbolic: every
/// listed jump enters with rate `Gamma` (the polynomial variable).
pub fn symbolic_params(
    n_levels: usize,
    detunings: Vec<BigRational>,
    drives: Vec<(usize, usize, BigRational)>,
    sink_rates: Vec<BigRational>,
    jumps: Vec<Matrix<ExactComplex>>,
) -> SystemParams<RatePoly> {
    let lift = |r: BigRational| Poly::constant(ExactComplex::real(r));
    SystemParams {
        n_levels,
        detunings: detunings.into_iter().map(lift).collect(),
        drives: drives.into_iter().map(|(i, j, o)| (i, j, lift(o))).collect(),
        sink_rates: sink_rates.into_iter().map(lift).collect(),
        intra_jumps: jumps
            .into_iter()
            .map(|m| (m.map(|e| Poly::constant(e.clone())), Poly::x()))
            .collect(),
    }
}

/// Effective Lindbladian of the qubit with symbolic jump rate at rational
/// parameters (qubit coalescence drives are rational, so no basis change is
/// needed). `case_i` selects the directed decay, otherwise the combined
/// bit/phase flip.
pub fn qubit_symbolic_lindbladian(
    gamma_i: &BigRational,
    gamma_e: &BigRational,
    omega: &BigRational,
    case_i: bool,
) -> Result<RateMatrix> {
    let jump = if case_i {
        Matrix::from_rows(vec![
            vec![ExactComplex::zero(), ExactComplex::zero()],
            vec![ExactComplex::one(), ExactComplex::zero()],
        ])
    } else {
        Matrix::from_rows(vec![
            vec![ExactComplex::zero(), -ExactComplex::i()],
            vec![ExactComplex::i(), ExactComplex::zero()],
        ])
    };
    let params = symbolic_params(
        3,
        vec![BigRational::zero(), BigRational::zero()],
        vec![(2, 3, omega.clone())],
        vec![gamma_i.clone(), gamma_e.clone()],
        vec![jump],
    );
    Ok(build_matrices(&params)?.lindbladian_eff)
}

pub enum QutritCase {
    Decays,
    Dephasing,
}

/// Effective Lindbladian of the qutrit at its triple-degeneracy point with a
/// symbolic jump rate, represented in a rescaled basis that clears the
/// sqrt(2) from the critical drive.
///
/// The returned matrix is `(D (x) D)^{-1} L_eff (D (x) D)` with
/// `D = diag(1, sqrt2, 2)` on the excited basis: the diagonal similarity
/// turns every drive entry and every jump contribution into a rational
/// number while preserving the characteristic polynomial and the whole
/// Jordan structure, which is all this representation is used for.
pub fn qutrit_symbolic_lindbladian_at_ep(
    gamma_h: &BigRational,
    gamma_e: &BigRational,
    case: QutritCase,
) -> Result<RateMatrix> {
    if gamma_h == gamma_e {
        return Err(Error::InvalidSpec("triple degeneracy needs gamma_h != gamma_e".into()));
    }
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let gamma_i = (gamma_h + gamma_e) / &two;
    let gt = (gamma_h - gamma_e) / &two; // half the rate difference
    let half_i = |g: &BigRational| {
        // -i g / 2 as a constant polynomial
        Poly::constant(ExactComplex::new(BigRational::zero(), -(g / &two)))
    };
    let rat = |r: BigRational| Poly::constant(ExactComplex::real(r));
    let x = Poly::<ExactComplex>::x();
    let minus_half_i_x = x.scale(&ExactComplex::new(BigRational::zero(), -BigRational::new(1.into(), 2.into())));

    // Rescaled drive entries: (0,1) and (1,2) carry gt/2, (1,0) and (2,1) gt/4.
    let o_up = rat(&gt / &two);
    let o_dn = rat(&gt / &four);
    let zero = RatePoly::zero();

    // Anti-Hermitian jump contribution to H_eff: -(i/2) Gamma sum L^dag L.
    // Decays: diag(2, 1, 0); dephasing: identity (the channel squares to 1).
    let jj_diag: [i64; 3] = match case {
        QutritCase::Decays => [2, 1, 0],
        QutritCase::Dephasing => [1, 1, 1],
    };

    let mut h_eff: RateMatrix = Matrix::zeros(3, 3);
    h_eff[(0, 0)] = half_i(gamma_h) + minus_half_i_x.scale(&ExactComplex::from_i64(jj_diag[0]));
    h_eff[(1, 1)] = half_i(&gamma_i) + minus_half_i_x.scale(&ExactComplex::from_i64(jj_diag[1]));
    h_eff[(2, 2)] = half_i(gamma_e) + minus_half_i_x.scale(&ExactComplex::from_i64(jj_diag[2]));
    h_eff[(0, 1)] = o_up.clone();
    h_eff[(1, 0)] = o_dn.clone();
    h_eff[(1, 2)] = o_up;
    h_eff[(2, 1)] = o_dn;
    let _ = zero;

    let i_poly = <RatePoly as Conjugate>::i();
    let mut lind = kron_sum(
        &h_eff.scale(&(-i_poly.clone())),
        &h_eff.conj().scale(&i_poly),
    )?;

    // Jump superoperator terms Gamma * L (x) L* in the rescaled basis.
    let elem = |r: usize, c: usize, v: ExactComplex| -> Matrix<ExactComplex> {
        let mut m = Matrix::zeros(3, 3);
        m[(r, c)] = v;
        m
    };
    let jump_terms: Vec<Matrix<ExactComplex>> = match case {
        QutritCase::Decays => vec![
            // |i><h|, |e><h|, |e><i| pick up 1/sqrt2, 1/2, 1/sqrt2; the
            // tensor squares make the factors rational.
            elem(1, 0, ExactComplex::one()),
            elem(2, 0, ExactComplex::one()),
            elem(2, 1, ExactComplex::one()),
        ],
        QutritCase::Dephasing => {
            // D^{-1} L_ph D with L_ph = [[0,0,-1],[0,1,0],[-1,0,0]].
            let mut l = Matrix::zeros(3, 3);
            l[(0, 2)] = ExactComplex::from_i64(-2);
            l[(1, 1)] = ExactComplex::one();
            l[(2, 0)] = ExactComplex::from_ratio(-1, 2);
            vec![l]
        }
    };
    let scales: Vec<ExactComplex> = match case {
        QutritCase::Decays => vec![
            ExactComplex::from_ratio(1, 2),
            ExactComplex::from_ratio(1, 4),
            ExactComplex::from_ratio(1, 2),
        ],
        QutritCase::Dephasing => vec![ExactComplex::one()],
    };
    for (l, s) in jump_terms.iter().zip(scales) {
        let kron = l.kron(&l.conj()).map(|e| {
            Poly::new(vec![ExactComplex::zero(), e.clone() * s.clone()])
        });
        lind = lind.add(&kron);
    }
    Ok(lind)
}

/// Shift a symbolic matrix by `+ c I` (used to recenter the spectrum on an
/// exceptional point before reading off rate exponents).
pub fn shift_diagonal(m: &RateMatrix, c: &BigRational) -> RateMatrix {
    let mut out = m.clone();
    let shift = Poly::constant(ExactComplex::real(c.clone()));
    for k in 0..m.rows() {
        out[(k, k)] = out[(k, k)].clone() + shift.clone();
    }
    out
}

/// The exactly known cubic factor of the recentered qutrit decay-cascade
/// characteristic polynomial:
/// `(Gamma + x) (x^2 + 2 Gamma x - gt Gamma / 2 + 3 Gamma^2 / 4)` with
/// `gt = (gamma_h - gamma_e)/2`, expanded monic in `x`.
pub fn qutrit_decay_cubic_factor(gamma_h: &BigRational, gamma_e: &BigRational) -> GammaPolynomial {
    let two = BigRational::from_integer(2.into());
    let gt = ExactComplex::real((gamma_h - gamma_e) / &two);
    let g = Poly::<ExactComplex>::x();
    let c0 = g.clone()
        * g.clone()
        * (g.scale(&ExactComplex::from_ratio_i64(3, 4)) - Poly::constant(gt.clone() * ExactComplex::from_ratio_i64(1, 2)));
    let c1 = g.clone() * g.scale(&ExactComplex::from_ratio_i64(11, 4))
        - g.scale(&(gt * ExactComplex::from_ratio_i64(1, 2)));
    let c2 = g.scale(&ExactComplex::from_i64(3));
    let c3 = Poly::one();
    GammaPolynomial::from_lambda_poly(Poly::new(vec![c0, c1, c2, c3])).expect("monic")
}

/// Evaluate a symbolic matrix at a floating rate value (for cross-checks
/// against the floating pipeline).
pub fn evaluate_at_rate(m: &RateMatrix, rate: f64) -> CMatrix {
    let g = ExactComplex::from_f64_exact(rate, 0.0);
    m.map(|p| p.eval(&g).to_c64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn char_poly_of_one_by_one() {
        // [-Gamma] -> lambda + Gamma
        let m: RateMatrix = Matrix::from_rows(vec![vec![-Poly::<ExactComplex>::x()]]);
        let p = GammaPolynomial::char_poly(&m).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(p.a_coeff(0), Poly::one());
        assert_eq!(p.a_coeff(1), Poly::x());
    }

    #[test]
    fn char_poly_matches_eigensolver_at_sample_rates() {
        let m = qubit_symbolic_lindbladian(&rat(1, 5), &rat(9, 10), &rat(7, 40), true).unwrap();
        let p = GammaPolynomial::char_poly(&m).unwrap();
        // Away from the degenerate rate-zero point, where pointwise
        // eigenvalue comparison is well-posed.
        for rate in [0.03125, 0.125, 0.5] {
            let coeffs = p.substitute_rate(&BigRational::from_float(rate).unwrap());
            let roots = exact_poly_roots(&coeffs).unwrap();
            let float = evaluate_at_rate(&m, rate);
            let evs = eig(&float).unwrap().eigenvalues;
            for ev in evs {
                let nearest = roots.iter().map(|r| (r - ev).norm()).fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-9, "rate {rate}: eigenvalue {ev} unmatched");
            }
        }
    }

    #[test]
    fn qubit_case_i_constant_coefficient_divisible_by_known_root() {
        // lambda_4 = -(Gamma + gamma_e + gamma_i)/2 is a root for every rate,
        // so the characteristic polynomial is divisible by that linear factor.
        let (gi, ge, om) = (rat(1, 5), rat(9, 10), rat(7, 40));
        let m = qubit_symbolic_lindbladian(&gi, &ge, &om, true).unwrap();
        let p = GammaPolynomial::char_poly(&m).unwrap();
        // Factor: lambda + (Gamma + ge + gi)/2, monic in lambda.
        let half_sum = ExactComplex::real((&ge + &gi) / BigRational::from_integer(2.into()));
        let factor = GammaPolynomial::from_lambda_poly(Poly::new(vec![
            Poly::x().scale(&ExactComplex::from_ratio_i64(1, 2)) + Poly::constant(half_sum),
            Poly::one(),
        ]))
        .unwrap();
        let q = p.divide_exact(&factor).unwrap();
        assert_eq!(q.degree(), 3);
    }

    #[test]
    fn exact_root_polish_resolves_clustered_roots() {
        // (x - 1e-6)(x - 2e-6)(x + 1): clustered tiny roots stay accurate.
        let r1 = ExactComplex::from_ratio(1, 1_000_000);
        let r2 = ExactComplex::from_ratio(2, 1_000_000);
        let r3 = ExactComplex::from_i64(-1);
        let poly = Poly::new(vec![ExactComplex::one()])
            * Poly::new(vec![-r1.clone(), ExactComplex::one()])
            * Poly::new(vec![-r2.clone(), ExactComplex::one()])
            * Poly::new(vec![-r3.clone(), ExactComplex::one()]);
        let roots = exact_poly_roots(poly.coeffs()).unwrap();
        for want in [1e-6, 2e-6, -1.0] {
            let best = roots.iter().map(|r| (r - C64::new(want, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-14 * want.abs().max(1e-5), "root {want}: err {best}");
        }
    }
}
