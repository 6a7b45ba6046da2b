//! Newton diagram of a monic polynomial whose coefficients are exact
//! polynomials in a rate parameter.
//!
//! Points `(k, beta_k)` collect the lowest rate exponent of each nonzero
//! coefficient `a_k`; the lower convex hull's segment slopes are the leading
//! exponents of the eigenvalue branches, the horizontal spans their
//! multiplicities, and the polynomial assembled from the on-segment leading
//! coefficients fixes the branch prefactors.

use super::charpoly::{exact_poly_roots, GammaPolynomial};
use crate::error::{Error, Result};
use crate::linalg::ExactComplex;
use num::complex::Complex64 as C64;
use num::rational::BigRational;
use num::traits::Zero;

#[derive(Clone, Debug)]
pub struct DiagramSegment {
    /// Leading branch exponent, exact.
    pub slope: BigRational,
    /// Branch multiplicity: horizontal span of the hull segment.
    pub span: usize,
    /// Segment polynomial in the branch prefactor, ascending; index `j`
    /// corresponds to point `k_right - j`, so the degree equals `span` and
    /// the constant term is the right-vertex leading coefficient.
    pub polynomial: Vec<ExactComplex>,
}

impl DiagramSegment {
    /// Exact root for a span-1 segment.
    pub fn exact_linear_root(&self) -> Option<ExactComplex> {
        if self.span == 1 && self.polynomial.len() == 2 {
            Some(-(self.polynomial[0].clone() / self.polynomial[1].clone()))
        } else {
            None
        }
    }

    /// All prefactor roots (the segment polynomial has a nonzero constant
    /// term by construction, so every root is a genuine branch coefficient).
    pub fn roots(&self) -> Result<Vec<C64>> {
        let lead = self.polynomial.last().cloned().ok_or_else(|| {
            Error::Numeric("empty segment polynomial".into())
        })?;
        let monic: Vec<ExactComplex> = self
            .polynomial
            .iter()
            .map(|c| c.clone() / lead.clone())
            .collect();
        exact_poly_roots(&monic)
    }
}

#[derive(Clone, Debug)]
pub struct NewtonDiagram {
    /// `(k, beta_k)` for every identically nonzero coefficient.
    pub points: Vec<(usize, usize)>,
    /// Lower-hull segments, slopes strictly increasing left to right.
    pub segments: Vec<DiagramSegment>,
    /// Number of identically-zero trailing coefficients stripped before
    /// constructing the diagram (exact zero roots of the polynomial family).
    pub reduced_zero_roots: usize,
}

pub fn newton_diagram(p: &GammaPolynomial) -> Result<NewtonDiagram> {
    let n = p.degree();
    // Strip identically-zero trailing coefficients: exact lambda = 0 roots.
    let mut reduced = 0usize;
    while reduced < n && p.a_coeff(n - reduced).is_zero() {
        reduced += 1;
    }
    let deg = n - reduced;
    if deg == 0 {
        return Ok(NewtonDiagram {
            points: vec![(0, 0)],
            segments: vec![],
            reduced_zero_roots: reduced,
        });
    }

    let mut points = Vec::new();
    let mut orders: Vec<Option<(usize, ExactComplex)>> = Vec::with_capacity(deg + 1);
    for k in 0..=deg {
        let lead = p.leading_order(k);
        if let Some((beta, _)) = &lead {
            points.push((k, *beta));
        }
        orders.push(lead);
    }

    // Monotone-chain lower hull over the integer points.
    let cross = |o: (usize, usize), a: (usize, usize), b: (usize, usize)| -> i64 {
        let (ox, oy) = (o.0 as i64, o.1 as i64);
        let (ax, ay) = (a.0 as i64, a.1 as i64);
        let (bx, by) = (b.0 as i64, b.1 as i64);
        (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)
    };
    let mut hull: Vec<(usize, usize)> = Vec::new();
    for &pt in &points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0 {
            hull.pop();
        }
        hull.push(pt);
    }
    if hull.first().map(|p| p.0) != Some(0) || hull.last().map(|p| p.0) != Some(deg) {
        return Err(Error::Numeric(
            "diagram hull does not reach both end coefficients".into(),
        ));
    }

    let mut segments = Vec::new();
    for w in hull.windows(2) {
        let (k1, b1) = w[0];
        let (k2, b2) = w[1];
        let span = k2 - k1;
        let slope = BigRational::new(
            (b2 as i64 - b1 as i64).into(),
            (span as i64).into(),
        );
        let mut polynomial = vec![ExactComplex::zero(); span + 1];
        for (j, slot) in polynomial.iter_mut().enumerate() {
            let k = k2 - j;
            if let Some(Some((beta, alpha))) = orders.get(k).map(|o| o.as_ref()) {
                // On-line test, exact in integers:
                // (beta - b1)(k2 - k1) == (b2 - b1)(k - k1)
                let lhs = (*beta as i64 - b1 as i64) * span as i64;
                let rhs = (b2 as i64 - b1 as i64) * (k as i64 - k1 as i64);
                if lhs == rhs {
                    *slot = alpha.clone();
                }
            }
        }
        segments.push(DiagramSegment { slope, span, polynomial });
    }

    // Slopes must increase strictly along the lower hull.
    for w in segments.windows(2) {
        if w[0].slope >= w[1].slope {
            return Err(Error::Numeric("hull slopes not strictly increasing".into()));
        }
    }
    debug_assert_eq!(segments.iter().map(|s| s.span).sum::<usize>(), deg);

    Ok(NewtonDiagram { points, segments, reduced_zero_roots: reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Poly;
    use num::traits::One;

    type RatePoly = Poly<ExactComplex>;

    fn gp(coeffs: Vec<RatePoly>) -> GammaPolynomial {
        GammaPolynomial::from_lambda_poly(Poly::new(coeffs)).unwrap()
    }

    fn x_pow(beta: usize, num: i64, den: i64) -> RatePoly {
        let mut c = vec![ExactComplex::zero(); beta + 1];
        c[beta] = ExactComplex::from_ratio(num, den);
        Poly::new(c)
    }

    #[test]
    fn two_segment_hull_with_fractional_slope() {
        // lambda^6 + 6 G lambda^5 - (5/2) G lambda^4 - (1/2) G lambda^3
        //   - (1/2) G^2 lambda^2 - (15/32) G lambda - (1/2) G^2
        // (the shape of the recentered qutrit quotient at gt = 1).
        let p = gp(vec![
            x_pow(2, -1, 2),
            x_pow(1, -15, 32),
            x_pow(2, -1, 2),
            x_pow(1, -1, 2),
            x_pow(1, -5, 2),
            x_pow(1, 6, 1),
            Poly::one(),
        ]);
        let d = newton_diagram(&p).unwrap();
        assert_eq!(d.reduced_zero_roots, 0);
        assert_eq!(d.segments.len(), 2);
        assert_eq!(d.segments[0].slope, BigRational::new(1.into(), 5.into()));
        assert_eq!(d.segments[0].span, 5);
        assert_eq!(d.segments[1].slope, BigRational::new(1.into(), 1.into()));
        assert_eq!(d.segments[1].span, 1);
        // Slope-1 segment root: -(-1/2) / (-15/32) = -16/15 exactly.
        let mu = d.segments[1].exact_linear_root().unwrap();
        assert_eq!(mu, ExactComplex::from_ratio(-16, 15));
        // Slope-1/5 segment: mu^5 = 15/32, five roots on a ring.
        let roots = d.segments[0].roots().unwrap();
        assert_eq!(roots.len(), 5);
        let want = (15.0f64 / 32.0).powf(0.2);
        for r in roots {
            assert!((r.norm() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn trailing_zero_coefficients_reduce_degree() {
        // lambda^2 (lambda + G): constant and linear coefficients vanish.
        let p = gp(vec![
            RatePoly::zero(),
            RatePoly::zero(),
            Poly::x(),
            Poly::one(),
        ]);
        let d = newton_diagram(&p).unwrap();
        assert_eq!(d.reduced_zero_roots, 2);
        assert_eq!(d.segments.len(), 1);
        assert_eq!(d.segments[0].slope, BigRational::new(1.into(), 1.into()));
    }

    #[test]
    fn diagonalizable_family_has_unit_slopes() {
        // (lambda + G)(lambda + 2G) = lambda^2 + 3G lambda + 2G^2
        let p = gp(vec![x_pow(2, 2, 1), x_pow(1, 3, 1), Poly::one()]);
        let d = newton_diagram(&p).unwrap();
        assert_eq!(d.segments.len(), 1);
        assert_eq!(d.segments[0].slope, BigRational::new(1.into(), 1.into()));
        assert_eq!(d.segments[0].span, 2);
    }
}
