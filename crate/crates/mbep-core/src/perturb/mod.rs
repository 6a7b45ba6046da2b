//! How quantum-jump perturbations split multi-block exceptional points:
//! closed-form spectra for the four dissipation presets, exact characteristic
//! polynomials over a symbolic rate, Newton-diagram exponent extraction, and
//! log-log splitting-exponent fits.

pub mod charpoly;
pub mod diagram;

pub use charpoly::{
    evaluate_at_rate, exact_poly_roots, qubit_symbolic_lindbladian,
    qutrit_decay_cubic_factor, qutrit_symbolic_lindbladian_at_ep, GammaPolynomial, QutritCase,
    RateMatrix, RatePoly,
};
pub use diagram::{newton_diagram, DiagramSegment, NewtonDiagram};

use crate::error::{Error, Result};
use crate::linalg::eig;
use crate::model::Preset;
use num::complex::Complex64 as C64;
use num::rational::BigRational;

fn csqrt(x: f64) -> C64 {
    C64::new(x, 0.0).sqrt()
}

/// Eigenvalues of the qubit effective Lindbladian with the directed decay
/// channel, by the Cardano formula: three roots of the depressed cubic in
/// `t = lambda + (gamma_i + gamma_e + rate)/2`,
///
/// ```text
/// t^3 = (kappa/4) t + 2 nu,   nu = rate * omega^2,
/// kappa = (rate + gamma_i - gamma_e)^2 - 16 omega^2,
/// ```
///
/// plus the exactly shifted `lambda_4 = -(rate + gamma_e + gamma_i)/2`.
/// All radicals are principal branches.
pub fn qubit_case_i_eigenvalues(gamma_i: f64, gamma_e: f64, omega: f64, rate: f64) -> [C64; 4] {
    let base = C64::new(-(gamma_i + gamma_e + rate) / 2.0, 0.0);
    let nu = rate * omega * omega;
    let kappa = (rate + gamma_i - gamma_e).powi(2) - 16.0 * omega * omega;
    let k12 = kappa / 12.0;
    let inner = C64::new(nu * nu - k12 * k12 * k12, 0.0).sqrt();
    let c = (C64::new(nu, 0.0) + inner).powf(1.0 / 3.0);
    let xi = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out = [base; 4];
    if c.norm() == 0.0 {
        // nu = kappa = 0: the cubic collapses to a triple root at the base.
        return out;
    }
    for (k, slot) in out.iter_mut().take(3).enumerate() {
        let rot = xi.powu(k as u32) * c;
        *slot = base + rot + C64::new(k12, 0.0) / rot;
    }
    out
}

/// Eigenvalues of the qubit effective Lindbladian with the combined bit- and
/// phase-flip channel:
/// `lambda_1 = -(gamma_i + gamma_e)/2`, `lambda_4 = -(4 rate + gamma_i + gamma_e)/2`,
/// `lambda_{2,3} = [-(2 rate + gamma_i + gamma_e) +- sqrt(4 rate^2 + (gamma_i - gamma_e)^2 - 16 omega^2)]/2`.
pub fn qubit_case_ii_eigenvalues(gamma_i: f64, gamma_e: f64, omega: f64, rate: f64) -> [C64; 4] {
    let s = gamma_i + gamma_e;
    let rad = csqrt(4.0 * rate * rate + (gamma_i - gamma_e).powi(2) - 16.0 * omega * omega);
    [
        C64::new(-s / 2.0, 0.0),
        (C64::new(-(2.0 * rate + s), 0.0) + rad) / 2.0,
        (C64::new(-(2.0 * rate + s), 0.0) - rad) / 2.0,
        C64::new(-(4.0 * rate + s) / 2.0, 0.0),
    ]
}

/// The nine closed-form eigenvalues of the qutrit effective Lindbladian with
/// the structured dephasing channel, with `gamma_i = (gamma_h + gamma_e)/2`
/// pinned by the triple-degeneracy condition. Ordering follows the closed
/// forms: two at `-gamma_i`, one at `-2 rate - gamma_i`, the pair with the
/// full radical, then the two permanently degenerate pairs with the half
/// radical.
pub fn qutrit_case_ii_eigenvalues(gamma_h: f64, gamma_e: f64, omega: f64, rate: f64) -> [C64; 9] {
    let gamma_i = (gamma_h + gamma_e) / 2.0;
    let gt = (gamma_h - gamma_e) / 2.0;
    let base = -rate - gamma_i;
    let r1 = csqrt(rate * rate + gt * gt - 8.0 * omega * omega);
    let r2 = csqrt(4.0 * rate * rate + gt * gt - 8.0 * omega * omega) / 2.0;
    let b = C64::new(base, 0.0);
    [
        C64::new(-gamma_i, 0.0),
        C64::new(-gamma_i, 0.0),
        C64::new(-2.0 * rate - gamma_i, 0.0),
        b - r1,
        b + r1,
        b - r2,
        b - r2,
        b + r2,
        b + r2,
    ]
}

/// Critical drives where the qubit dephasing-channel spectrum coalesces:
/// the rate-free coalescence of the coherent part at `|gamma_i - gamma_e|/4`
/// and the jump-shifted one at `sqrt((gamma_i - gamma_e)^2 + 4 rate^2)/4`.
pub fn qubit_case_ii_critical_drives(gamma_i: f64, gamma_e: f64, rate: f64) -> [f64; 2] {
    let d = gamma_i - gamma_e;
    [d.abs() / 4.0, (d * d + 4.0 * rate * rate).sqrt() / 4.0]
}

/// Critical drives of the qutrit dephasing-channel spectrum: the rate-free
/// triple-degeneracy drive and the two jump-shifted coalescences.
pub fn qutrit_case_ii_critical_drives(gamma_h: f64, gamma_e: f64, rate: f64) -> [f64; 3] {
    let gt = (gamma_h - gamma_e) / 2.0;
    let s8 = 8.0f64.sqrt();
    [
        gt.abs() / (2.0 * s8 / 2.0), // |gamma_h - gamma_e| / (4 sqrt2)
        (rate * rate + gt * gt).sqrt() / s8,
        (4.0 * rate * rate + gt * gt).sqrt() / s8,
    ]
}

/// Splitting of the qutrit decay-cascade spectrum at the triple-degeneracy
/// point: the exactly known triplet from the cubic factor, the leading-order
/// linear shift of the single block, and the five-branch ring.
#[derive(Clone, Debug)]
pub struct QutritCascadeSplitting {
    /// Unperturbed eigenvalue `-gamma_i`.
    pub lambda_ep: f64,
    /// `lambda_ep - rate`, exact.
    pub lambda6: f64,
    /// `lambda_ep - rate +- sqrt(rate (rate + gamma_h - gamma_e))/2`, exact.
    pub lambda78: (C64, C64),
    /// `lambda_ep - 16 rate / 15`, leading order.
    pub lambda9: f64,
    /// `(15 (gamma_h - gamma_e)^4 / 512)^(1/5) rate^(1/5)`.
    pub ring_radius: f64,
    /// `lambda_ep + ring_radius e^{2 pi i r / 5}`, r = 1..5, leading order.
    pub ring: [C64; 5],
}

pub fn qutrit_case_i_splitting(gamma_h: f64, gamma_e: f64, rate: f64) -> Result<QutritCascadeSplitting> {
    if rate < 0.0 {
        return Err(Error::InvalidSpec("rate must be nonnegative".into()));
    }
    let gamma_i = (gamma_h + gamma_e) / 2.0;
    let lambda_ep = -gamma_i;
    let rad = csqrt(rate * (rate + gamma_h - gamma_e)) / 2.0;
    let base = C64::new(lambda_ep - rate, 0.0);
    let ring_radius = (15.0 * (gamma_h - gamma_e).powi(4) / 512.0).powf(0.2) * rate.powf(0.2);
    let mut ring = [C64::new(0.0, 0.0); 5];
    for (r, slot) in ring.iter_mut().enumerate() {
        let phase = 2.0 * std::f64::consts::PI * (r as f64 + 1.0) / 5.0;
        *slot = C64::new(lambda_ep, 0.0) + C64::from_polar(ring_radius, phase);
    }
    Ok(QutritCascadeSplitting {
        lambda_ep,
        lambda6: lambda_ep - rate,
        lambda78: (base + rad, base - rad),
        lambda9: lambda_ep - 16.0 * rate / 15.0,
        ring_radius,
        ring,
    })
}

/// Eigenvalue provider for a rate-parameterized family.
pub trait RateFamily {
    fn eigenvalues(&self, rate: f64) -> Result<Vec<C64>>;
}

/// Numeric route: build the preset's effective Lindbladian and diagonalize.
pub struct NumericRateFamily(pub Preset);

impl RateFamily for NumericRateFamily {
    fn eigenvalues(&self, rate: f64) -> Result<Vec<C64>> {
        let parts = self.0.with_rate(rate).parts()?;
        Ok(eig(&parts.lindbladian_eff)?.eigenvalues)
    }
}

/// Closed-form route for the presets with analytic spectra.
pub struct ClosedFormRateFamily(pub Preset);

impl RateFamily for ClosedFormRateFamily {
    fn eigenvalues(&self, rate: f64) -> Result<Vec<C64>> {
        match self.0 {
            Preset::QubitI { gamma_i, gamma_e, omega, .. } => {
                Ok(qubit_case_i_eigenvalues(gamma_i, gamma_e, omega, rate).to_vec())
            }
            Preset::QubitII { gamma_i, gamma_e, omega, .. } => {
                Ok(qubit_case_ii_eigenvalues(gamma_i, gamma_e, omega, rate).to_vec())
            }
            Preset::QutritII { gamma_h, gamma_e, omega, .. } => {
                Ok(qutrit_case_ii_eigenvalues(gamma_h, gamma_e, omega, rate).to_vec())
            }
            Preset::QutritI { .. } => Err(Error::InvalidSpec(
                "the decay cascade has no closed-form spectrum; use the exact-polynomial route"
                    .into(),
            )),
        }
    }
}

/// Exact-polynomial route: substitute the rate into a precomputed symbolic
/// characteristic polynomial and refine roots with exact evaluation. The
/// spectrum is recentered by `shift` (the polynomial variable is
/// `lambda + shift`).
pub struct CharPolyRateFamily {
    pub poly: GammaPolynomial,
    pub shift: f64,
}

impl CharPolyRateFamily {
    /// The qutrit decay cascade at its triple-degeneracy point.
    pub fn qutrit_cascade(gamma_h: &BigRational, gamma_e: &BigRational) -> Result<Self> {
        let m = qutrit_symbolic_lindbladian_at_ep(gamma_h, gamma_e, QutritCase::Decays)?;
        let two = BigRational::from_integer(2.into());
        let gamma_i = (gamma_h + gamma_e) / &two;
        let shifted = charpoly::shift_diagonal(&m, &gamma_i);
        let poly = GammaPolynomial::char_poly(&shifted)?;
        Ok(CharPolyRateFamily {
            poly,
            shift: crate::linalg::exact::ratio_to_f64(&gamma_i),
        })
    }
}

impl RateFamily for CharPolyRateFamily {
    fn eigenvalues(&self, rate: f64) -> Result<Vec<C64>> {
        let g = BigRational::from_float(rate)
            .ok_or_else(|| Error::InvalidSpec(format!("non-finite rate {rate}")))?;
        let coeffs = self.poly.substitute_rate(&g);
        let roots = exact_poly_roots(&coeffs)?;
        Ok(roots.into_iter().map(|z| z - C64::new(self.shift, 0.0)).collect())
    }
}

/// Per-branch splitting fit: `|lambda(rate) - lambda(0)| ~ coeff * rate^exponent`.
#[derive(Clone, Debug)]
pub struct BranchFit {
    pub exponent: f64,
    /// Complex prefactor taken at the smallest grid rate.
    pub coefficient: C64,
    pub r_squared: f64,
    /// The branch's rate-zero limit.
    pub reference: C64,
    /// True when the branch never moves (no fit performed).
    pub stationary: bool,
}

#[derive(Clone, Debug)]
pub struct SplittingFitReport {
    pub branches: Vec<BranchFit>,
    pub warnings: Vec<String>,
}

/// Minimal-total-distance assignment of `curr` values to `prev` branches
/// (exact bitmask DP; spectra in scope are small).
fn assign_branches(prev: &[C64], curr: &[C64]) -> Vec<usize> {
    let n = prev.len();
    assert_eq!(n, curr.len());
    assert!(n <= 16, "assignment sized for small spectra");
    let full = (1usize << n) - 1;
    let mut cost = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    cost[0] = 0.0;
    for mask in 0..=full {
        if cost[mask].is_infinite() {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == n {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let c = cost[mask] + (prev[i] - curr[j]).norm();
            if c < cost[next] {
                cost[next] = c;
                choice[next] = j;
            }
        }
    }
    let mut out = vec![0usize; n];
    let mut mask = full;
    for i in (0..n).rev() {
        let j = choice[mask];
        out[i] = j;
        mask &= !(1 << j);
    }
    out
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Track eigenvalue branches over a rate grid by nearest-neighbor
/// continuation from the rate-zero spectrum and fit the log-log slope of the
/// displacement per branch.
pub fn splitting_exponent_fit(
    family: &dyn RateFamily,
    rate_grid: &[f64],
) -> Result<SplittingFitReport> {
    if rate_grid.len() < 3 {
        return Err(Error::InvalidSpec("need at least 3 grid points".into()));
    }
    let mut grid = rate_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    if grid[0] <= 0.0 {
        return Err(Error::InvalidSpec("rate grid must be positive".into()));
    }
    let references = family.eigenvalues(0.0)?;
    let n = references.len();
    let scale = references.iter().map(|z| z.norm()).fold(1.0, f64::max);

    let mut warnings = Vec::new();
    let mut tracked: Vec<Vec<C64>> = vec![Vec::with_capacity(grid.len()); n];
    let mut prev = references.clone();
    for &g in &grid {
        let curr = family.eigenvalues(g)?;
        if curr.len() != n {
            return Err(Error::TrackingAmbiguity(format!(
                "spectrum size changed from {n} to {} at rate {g}",
                curr.len()
            )));
        }
        let assignment = assign_branches(&prev, &curr);
        // Ambiguity: a branch's match is nearly tied with a different value.
        for (b, &j) in assignment.iter().enumerate() {
            let d = (prev[b] - curr[j]).norm();
            for (k, other) in curr.iter().enumerate() {
                if k == j {
                    continue;
                }
                let alt = (prev[b] - other).norm();
                if alt < d * 1.001 && (curr[j] - other).norm() > 1e-12 * scale {
                    warnings.push(format!(
                        "branch {b} ambiguous at rate {g}: competing distances {d:.3e} / {alt:.3e}"
                    ));
                }
            }
        }
        let new_prev: Vec<C64> = assignment.iter().map(|&j| curr[j]).collect();
        for (b, v) in new_prev.iter().enumerate() {
            tracked[b].push(*v);
        }
        prev = new_prev;
    }

    let mut branches = Vec::with_capacity(n);
    for b in 0..n {
        let deltas: Vec<f64> = tracked[b]
            .iter()
            .map(|v| (v - references[b]).norm())
            .collect();
        if deltas.iter().all(|&d| d < 1e-13 * scale) {
            branches.push(BranchFit {
                exponent: f64::NAN,
                coefficient: C64::new(0.0, 0.0),
                r_squared: 1.0,
                reference: references[b],
                stationary: true,
            });
            continue;
        }
        let xs: Vec<f64> = grid.iter().map(|g| g.ln()).collect();
        let ys: Vec<f64> = deltas.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
        let (slope, _, r2) = linear_fit(&xs, &ys);
        let coefficient = (tracked[b][0] - references[b]) / C64::new(grid[0].powf(slope), 0.0);
        branches.push(BranchFit {
            exponent: slope,
            coefficient,
            r_squared: r2,
            reference: references[b],
            stationary: false,
        });
    }
    Ok(SplittingFitReport { branches, warnings })
}

/// Log-spaced grid between the given positive endpoints, inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points >= 2);
    let (a, b) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn multiset_close(a: &[C64], b: &[C64], tol: f64) -> bool {
        let mut used = vec![false; b.len()];
        'outer: for x in a {
            for (k, y) in b.iter().enumerate() {
                if !used[k] && (x - y).norm() <= tol {
                    used[k] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    #[test]
    fn cardano_collapses_at_zero_rate_on_the_ep() {
        let evs = qubit_case_i_eigenvalues(0.2, 0.9, 0.175, 0.0);
        for ev in evs {
            assert!((ev - c(-0.55, 0.0)).norm() < 1e-15, "{ev}");
        }
    }

    #[test]
    fn cardano_leading_split_follows_cube_root() {
        let (gi, ge, om) = (0.2, 0.9, 0.175);
        let rate = 1e-9;
        let evs = qubit_case_i_eigenvalues(gi, ge, om, rate);
        let radius = (2.0 * om * om).powf(1.0 / 3.0) * rate.powf(1.0 / 3.0);
        let base = c(-(gi + ge) / 2.0, 0.0);
        for ev in evs.iter().take(3) {
            let d = (ev - base).norm();
            assert!(
                (d - radius).abs() < 0.05 * radius,
                "splitting {d:.3e} vs ring {radius:.3e}"
            );
        }
    }

    #[test]
    fn qubit_case_ii_fixture_values() {
        // gamma_e = 0.9, gamma_i = 0.1, rate = 0.3, omega at the coalescence
        // value 0.2: pairs at -0.5, -1.1, and -0.8 +- 0.3.
        let evs = qubit_case_ii_eigenvalues(0.1, 0.9, 0.2, 0.3);
        let want = [c(-0.5, 0.0), c(-0.5, 0.0), c(-1.1, 0.0), c(-1.1, 0.0)];
        assert!(multiset_close(&evs, &want, 1e-14), "{evs:?}");
        // Zero rate: fourfold -(gamma_i + gamma_e)/2.
        for ev in qubit_case_ii_eigenvalues(0.1, 0.9, 0.2, 0.0) {
            assert!((ev - c(-0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn qutrit_case_ii_critical_drive_values() {
        let [a, b, cc] = qutrit_case_ii_critical_drives(0.8, 0.2, 0.3);
        assert!((a - 0.10606601717798213).abs() < 1e-15);
        assert!((b - 0.15).abs() < 1e-15);
        assert!((cc - 0.23717082451262844).abs() < 1e-15);
    }

    #[test]
    fn qutrit_case_ii_zero_rate_ninefold() {
        let (_, omega, _) = crate::model::qutrit_ep_parameters(0.8, 0.2).unwrap();
        for ev in qutrit_case_ii_eigenvalues(0.8, 0.2, omega, 0.0) {
            assert!((ev - c(-0.5, 0.0)).norm() < 1e-15, "{ev}");
        }
    }

    #[test]
    fn closed_forms_match_eigensolver_on_random_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..25 {
            let gi = rng.gen_range(0.0..1.0);
            let ge = rng.gen_range(0.0..1.0);
            let om = rng.gen_range(0.0..0.5);
            let rate = rng.gen_range(0.0..0.5);
            for case_i in [true, false] {
                let preset = if case_i {
                    Preset::QubitI { gamma_i: gi, gamma_e: ge, omega: om, rate }
                } else {
                    Preset::QubitII { gamma_i: gi, gamma_e: ge, omega: om, rate }
                };
                let closed = ClosedFormRateFamily(preset).eigenvalues(rate).unwrap();
                let numeric = NumericRateFamily(preset).eigenvalues(rate).unwrap();
                assert!(
                    multiset_close(&closed, &numeric, 1e-9),
                    "qubit case_i={case_i}: {closed:?} vs {numeric:?}"
                );
            }
            let gh = rng.gen_range(0.0..1.0);
            let ge2 = rng.gen_range(0.0..1.0);
            let preset = Preset::QutritII { gamma_h: gh, gamma_e: ge2, omega: om, rate };
            let closed = ClosedFormRateFamily(preset).eigenvalues(rate).unwrap();
            let numeric = NumericRateFamily(preset).eigenvalues(rate).unwrap();
            assert!(
                multiset_close(&closed, &numeric, 1e-9),
                "qutrit: {closed:?} vs {numeric:?}"
            );
        }
    }

    #[test]
    fn cascade_splitting_closed_values() {
        let s = qutrit_case_i_splitting(0.4, 0.2, 1e-5).unwrap();
        assert!((s.lambda6 - (-0.3 - 1e-5)).abs() < 1e-15);
        let want_radius = (15.0 * 0.2f64.powi(4) / 512.0).powf(0.2) * 1e-1;
        assert!((s.ring_radius - want_radius).abs() < 1e-15);
        assert!(qutrit_case_i_splitting(0.4, 0.2, -1.0).is_err());
    }

    #[test]
    fn segment_roots_predict_leading_branch_coefficients() {
        // Simple segment-polynomial roots are the first-order branch
        // prefactors: at a deep-asymptotic rate, every root mu of the
        // slope-s segment matches some branch via
        // (lambda - lambda_ep) / rate^s to 1e-2 relative.
        let (gh, ge) = (rat(2, 5), rat(1, 5));
        let family = CharPolyRateFamily::qutrit_cascade(&gh, &ge).unwrap();
        let diagram = newton_diagram(&family.poly).unwrap();
        let rate = 1e-8;
        let lam_ep = c(-0.3, 0.0);
        let evs = family.eigenvalues(rate).unwrap();
        for segment in &diagram.segments {
            let slope = segment.slope.numer().to_string().parse::<f64>().unwrap()
                / segment.slope.denom().to_string().parse::<f64>().unwrap();
            let roots = segment.roots().unwrap();
            // Only simple roots carry the clean first-order prediction; the
            // ring and linear segments here have simple roots throughout.
            for mu in roots {
                if mu.norm() == 0.0 {
                    continue;
                }
                let best = evs
                    .iter()
                    .map(|ev| ((ev - lam_ep) / C64::new(rate.powf(slope), 0.0) - mu).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    best <= 1e-2 * mu.norm(),
                    "slope {slope}: root {mu} missed by {best:.3e}"
                );
            }
        }
    }

    #[test]
    fn branch_assignment_is_stable() {
        let prev = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
        let curr = vec![c(1.05, 0.0), c(0.02, 0.98), c(-0.01, 0.01)];
        let a = assign_branches(&prev, &curr);
        assert_eq!(a, vec![2, 0, 1]);
    }

    #[test]
    fn diagonalizable_family_fits_unit_exponents() {
        struct Diag;
        impl RateFamily for Diag {
            fn eigenvalues(&self, rate: f64) -> Result<Vec<C64>> {
                Ok(vec![
                    c(-1.0 - rate, 0.0),
                    c(-2.0 + 0.5 * rate, 0.3 * rate),
                    c(-3.0, 0.0),
                ])
            }
        }
        let grid = log_grid(1e-8, 1e-4, 8);
        let report = splitting_exponent_fit(&Diag, &grid).unwrap();
        let moving: Vec<&BranchFit> =
            report.branches.iter().filter(|b| !b.stationary).collect();
        assert_eq!(moving.len(), 2);
        for b in moving {
            assert!((b.exponent - 1.0).abs() < 1e-6, "{}", b.exponent);
        }
        assert!(report.branches.iter().any(|b| b.stationary));
    }
}
