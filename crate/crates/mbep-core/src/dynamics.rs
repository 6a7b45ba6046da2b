//! Population dynamics under effective and full Lindbladians.
//!
//! Propagation is `rho(t) = unvec(e^{L t} vec(rho0))`, one fresh matrix
//! exponential per time point. Near an exceptional point the decay acquires
//! polynomial factors in `t`; tables optionally carry the prefactor series
//! `e^{+lambda_0 t} rho_jj(t)` with `lambda_0` the dominant decay rate (the
//! least-negative real part in the generator's spectrum, computed rather
//! than assumed), so the polynomial structure can be read off directly.

use crate::error::{Error, Result};
use crate::jordan::JordanChainSet;
use crate::linalg::{condition_number, eig, matrix_exp, CMatrix, Matrix, Poly};
use crate::model::{unvectorize, vectorize};
use num::complex::Complex64 as C64;

/// Population trajectories (and optional exponential-free prefactors) on a
/// shared time grid. `times` are in whatever unit the caller propagated with;
/// `decay_rate` is expressed per that same unit.
#[derive(Clone, Debug)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    /// `populations[level][k]` at `times[k]`; levels index the generator's
    /// underlying Hilbert space in order.
    pub populations: Vec<Vec<f64>>,
    /// `e^{+decay_rate * t} * populations`, when requested.
    pub prefactor: Option<Vec<Vec<f64>>>,
    pub decay_rate: Option<f64>,
}

fn check_density_matrix(rho0: &CMatrix, dim: usize) -> Result<()> {
    if rho0.rows() != dim || rho0.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim} density matrix"),
            actual: format!("{}x{}", rho0.rows(), rho0.cols()),
        });
    }
    let dev = rho0.sub(&rho0.dagger()).max_abs();
    if dev > 1e-10 * rho0.max_abs().max(1.0) {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let tr = rho0.trace();
    if tr.im.abs() > 1e-10 || tr.re > 1.0 + 1e-9 || tr.re <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "density matrix trace {tr} must be real in (0, 1]"
        )));
    }
    let evs = eig(&rho0.add(&rho0.dagger()).scale(&C64::new(0.5, 0.0)))?.eigenvalues;
    if evs.iter().any(|e| e.re < -1e-9) {
        return Err(Error::InvalidSpec("density matrix not positive semidefinite".into()));
    }
    Ok(())
}

fn populations_from_vec(state: &[C64]) -> Result<Vec<f64>> {
    let rho = unvectorize(state)?;
    let mut pops = Vec::with_capacity(rho.rows());
    for j in 0..rho.rows() {
        let p = rho[(j, j)];
        if p.im.abs() > 1e-10 {
            return Err(Error::Numeric(format!(
                "population {j} has imaginary residue {:.3e}",
                p.im
            )));
        }
        pops.push(p.re);
    }
    Ok(pops)
}

/// Dominant decay rate: minus the largest real part in the spectrum,
/// evaluated on validated eigenvalue clusters rather than raw eigenvalues.
/// A defective eigenvalue of block size k scatters like eps^(1/k) under
/// roundoff, while its cluster mean stays accurate to roundoff, and the
/// prefactor fit needs the rate to far better than the scatter.
pub fn dominant_decay_rate(generator: &CMatrix) -> Result<f64> {
    let report = crate::jordan::detect_structure(
        generator,
        crate::jordan::DEFAULT_CLUSTER_TOL,
        crate::jordan::DEFAULT_RANK_TOL,
    )?;
    let max_re = report
        .structures
        .iter()
        .map(|s| s.eigenvalue.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max_re.is_finite() {
        return Err(Error::Numeric("empty spectrum".into()));
    }
    Ok(-max_re)
}

/// Propagate a density matrix; `times` are raw generator time.
pub fn evolve(generator: &CMatrix, rho0: &CMatrix, times: &[f64]) -> Result<TrajectoryTable> {
    evolve_scaled(generator, rho0, times, 1.0)
}

/// Propagate with a dimensionless time axis: grid entry `tau` corresponds to
/// raw time `tau / tau_per_time` (`tau_per_time = 1` is the raw interface).
/// The prefactor decay rate is reported per unit of `tau`.
pub fn evolve_scaled(
    generator: &CMatrix,
    rho0: &CMatrix,
    taus: &[f64],
    tau_per_time: f64,
) -> Result<TrajectoryTable> {
    let n2 = generator.require_square()?;
    let dim = (n2 as f64).sqrt().round() as usize;
    if dim * dim != n2 {
        return Err(Error::DimensionMismatch {
            expected: "perfect-square generator dimension".into(),
            actual: format!("{n2}"),
        });
    }
    if !(tau_per_time.is_finite() && tau_per_time > 0.0) {
        return Err(Error::InvalidSpec("time scale must be positive".into()));
    }
    check_density_matrix(rho0, dim)?;

    let rate_raw = dominant_decay_rate(generator)?;
    let rate = rate_raw / tau_per_time;
    let v0 = vectorize(rho0);
    let mut populations = vec![Vec::with_capacity(taus.len()); dim];
    let mut prefactor = vec![Vec::with_capacity(taus.len()); dim];
    for &tau in taus {
        let t = tau / tau_per_time;
        let propagator = matrix_exp(generator, t)?;
        let state = propagator.matvec(&v0);
        let pops = populations_from_vec(&state)?;
        let amp = (rate * tau).exp();
        for (j, &p) in pops.iter().enumerate() {
            populations[j].push(p);
            prefactor[j].push(amp * p);
        }
    }
    Ok(TrajectoryTable {
        times: taus.to_vec(),
        populations,
        prefactor: Some(prefactor),
        decay_rate: Some(rate),
    })
}

/// Propagate in a Jordan basis: expand `vec(rho0)` over the chain ensemble,
/// then apply the closed-form block propagation
/// `e^{L t} v_g = e^{lambda t} sum_{j<=g} t^{g-j}/(g-j)! v_j`.
pub fn jordan_evolve(
    sets: &[JordanChainSet<C64>],
    rho0: &CMatrix,
    times: &[f64],
) -> Result<TrajectoryTable> {
    jordan_evolve_scaled(sets, rho0, times, 1.0)
}

pub fn jordan_evolve_scaled(
    sets: &[JordanChainSet<C64>],
    rho0: &CMatrix,
    taus: &[f64],
    tau_per_time: f64,
) -> Result<TrajectoryTable> {
    if sets.is_empty() {
        return Err(Error::IncompleteBasis { have: 0, need: 1 });
    }
    let n2 = sets[0].chains[0][0].len();
    let dim = (n2 as f64).sqrt().round() as usize;
    if dim * dim != n2 {
        return Err(Error::DimensionMismatch {
            expected: "perfect-square chain dimension".into(),
            actual: format!("{n2}"),
        });
    }
    check_density_matrix(rho0, dim)?;

    // Assemble the basis with per-chain normalization (a chain may be scaled
    // by any constant without breaking the recursion).
    let total: usize = sets.iter().map(|s| s.total_vectors()).sum();
    if total != n2 {
        return Err(Error::IncompleteBasis { have: total, need: n2 });
    }
    let mut basis: CMatrix = Matrix::zeros(n2, total);
    let mut scaled_chains: Vec<(C64, Vec<Vec<Vec<C64>>>)> = Vec::new();
    let mut col = 0;
    for set in sets {
        let mut chains = Vec::new();
        for chain in &set.chains {
            let scale = chain
                .iter()
                .map(|v| crate::linalg::vec_norm(v))
                .fold(0.0f64, f64::max);
            if scale == 0.0 {
                return Err(Error::InvalidChains("zero chain vector".into()));
            }
            let inv = C64::new(1.0 / scale, 0.0);
            let scaled: Vec<Vec<C64>> = chain
                .iter()
                .map(|v| v.iter().map(|x| x * inv).collect())
                .collect();
            for v in &scaled {
                basis.set_col(col, v);
                col += 1;
            }
            chains.push(scaled);
        }
        scaled_chains.push((set.eigenvalue, chains));
    }
    let cond = condition_number(&basis);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::EpProximity { cond });
    }

    let rhs = Matrix::column(&vectorize(rho0));
    let coeffs = basis.solve(&rhs)?;

    let rate_raw = -scaled_chains
        .iter()
        .map(|(l, _)| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let rate = rate_raw / tau_per_time;

    let mut populations = vec![Vec::with_capacity(taus.len()); dim];
    let mut prefactor = vec![Vec::with_capacity(taus.len()); dim];
    for &tau in taus {
        let t = tau / tau_per_time;
        let mut state = vec![C64::new(0.0, 0.0); n2];
        let mut col = 0;
        for (lambda, chains) in &scaled_chains {
            let decay = (lambda * t).exp();
            for chain in chains {
                for g in 0..chain.len() {
                    let c = coeffs[(col, 0)];
                    col += 1;
                    if c.norm() == 0.0 {
                        continue;
                    }
                    // e^{L t} v_{g+1} = e^{lambda t} sum_{j=0..g} t^j / j! v_{g+1-j}
                    let mut factor = 1.0f64;
                    for j in 0..=g {
                        if j > 0 {
                            factor *= t / j as f64;
                        }
                        let w = c * decay * factor;
                        for (s, x) in state.iter_mut().zip(&chain[g - j]) {
                            *s += w * x;
                        }
                    }
                }
            }
        }
        let pops = populations_from_vec(&state)?;
        let amp = (rate * tau).exp();
        for (j, &p) in pops.iter().enumerate() {
            populations[j].push(p);
            prefactor[j].push(amp * p);
        }
    }
    Ok(TrajectoryTable {
        times: taus.to_vec(),
        populations,
        prefactor: Some(prefactor),
        decay_rate: Some(rate),
    })
}

/// Result of the polynomial-prefactor fit.
#[derive(Clone, Debug)]
pub struct PrefactorFit {
    pub degree: usize,
    /// Relative fit residual at the accepted degree.
    pub residual: f64,
    /// Polynomial coefficients in the table's time unit, ascending.
    pub coefficients: Vec<f64>,
}

/// Estimate the polynomial degree of a prefactor series over a late-time
/// window: the smallest degree whose relative least-squares residual drops
/// below 1e-6. A residual floor above that signals contamination by
/// subdominant exponentials; the error advises widening the window.
pub fn prefactor_degree(
    table: &TrajectoryTable,
    level: usize,
    window: (f64, f64),
    max_degree: usize,
) -> Result<PrefactorFit> {
    let series = table
        .prefactor
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("table has no prefactor series".into()))?;
    let ys_all = series
        .get(level)
        .ok_or_else(|| Error::InvalidSpec(format!("no level {level}")))?;
    let sel: Vec<(f64, f64)> = table
        .times
        .iter()
        .zip(ys_all)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, y)| (*t, *y))
        .collect();
    if sel.len() < max_degree + 2 {
        return Err(Error::InvalidSpec(format!(
            "window holds {} points, need at least {}",
            sel.len(),
            max_degree + 2
        )));
    }
    let (t_lo, t_hi) = (sel[0].0, sel[sel.len() - 1].0);
    let mid = 0.5 * (t_lo + t_hi);
    let half = 0.5 * (t_hi - t_lo).max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = sel.iter().map(|(t, _)| (t - mid) / half).collect();
    let ys: Vec<f64> = sel.iter().map(|(_, y)| *y).collect();
    let y_norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();

    let mut floor = f64::INFINITY;
    for degree in 0..=max_degree {
        let coeffs = polyfit(&xs, &ys, degree)?;
        let resid: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let p: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
                (y - p).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        let rel = if y_norm > 0.0 { resid / y_norm } else { 0.0 };
        floor = floor.min(rel);
        if rel < 1e-6 {
            // Convert from the scaled abscissa back to the time unit.
            let x_of_t = Poly::new(vec![-mid / half, 1.0 / half]);
            let mut in_time = Poly::<f64>::zero();
            for c in coeffs.iter().rev() {
                in_time = in_time * x_of_t.clone() + Poly::new(vec![*c]);
            }
            let mut coefficients = in_time.coeffs().to_vec();
            coefficients.resize(degree + 1, 0.0);
            return Ok(PrefactorFit { degree, residual: rel, coefficients });
        }
    }
    Err(Error::WindowContaminated { floor })
}

fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = degree + 1;
    let mut ata: CMatrix = Matrix::zeros(n, n);
    let mut atb: CMatrix = Matrix::zeros(n, 1);
    for (x, y) in xs.iter().zip(ys) {
        let mut pow = vec![1.0f64; n];
        for k in 1..n {
            pow[k] = pow[k - 1] * x;
        }
        for r in 0..n {
            for c in 0..n {
                ata[(r, c)] += C64::new(pow[r] * pow[c], 0.0);
            }
            atb[(r, 0)] += C64::new(pow[r] * y, 0.0);
        }
    }
    let sol = ata.solve(&atb)?;
    Ok((0..n).map(|k| sol[(k, 0)].re).collect())
}

use num::traits::Zero;

/// Dimensionless-time scale of a preset: the factor `tau_per_time` with
/// `tau = tau_per_time * t` (half the summed qubit sink rates; the middle
/// qutrit sink rate).
pub fn preset_time_scale(preset: &crate::model::Preset) -> f64 {
    match *preset {
        crate::model::Preset::QubitI { gamma_i, gamma_e, .. }
        | crate::model::Preset::QubitII { gamma_i, gamma_e, .. } => (gamma_i + gamma_e) / 2.0,
        crate::model::Preset::QutritI { gamma_h, gamma_e, .. }
        | crate::model::Preset::QutritII { gamma_h, gamma_e, .. } => (gamma_h + gamma_e) / 2.0,
    }
}

/// Uniform grid of `points` values over `[0, max]`.
pub fn time_grid(max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && max > 0.0);
    (0..points).map(|k| max * k as f64 / (points - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{defective_hamiltonian_chain, kron_sum_jordan_basis, liouvillian_factor_chains};
    use crate::model::Preset;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit_ep_parts(rate: f64) -> crate::model::LindbladParts {
        Preset::QubitII { gamma_i: 0.2, gamma_e: 0.9, omega: 0.175, rate }
            .parts()
            .unwrap()
    }

    #[test]
    fn zero_generator_keeps_state_constant() {
        let gen: CMatrix = Matrix::zeros(4, 4);
        let rho0 = CMatrix::from_real_rows(vec![vec![0.7, 0.0], vec![0.0, 0.3]]);
        let table = evolve(&gen, &rho0, &[0.0, 1.0, 5.0]).unwrap();
        for k in 0..3 {
            assert!((table.populations[0][k] - 0.7).abs() < 1e-14);
            assert!((table.populations[1][k] - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian_initial_state() {
        let gen: CMatrix = Matrix::zeros(4, 4);
        let rho0 = CMatrix::from_rows(vec![
            vec![c(0.5, 0.0), c(0.1, 0.2)],
            vec![c(0.3, 0.0), c(0.5, 0.0)],
        ]);
        assert!(matches!(
            evolve(&gen, &rho0, &[0.0]),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn full_lindbladian_preserves_trace_and_hermiticity() {
        let parts = Preset::QutritII { gamma_h: 0.8, gamma_e: 0.2, omega: 0.11, rate: 0.3 }
            .parts()
            .unwrap();
        // Initial state: uniform excited coherent mixture, padded to 4 levels,
        // in the excited-first ordering of the full generator.
        let mut rho0: CMatrix = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                rho0[(i, j)] = if i == j { c(0.25, 0.0) } else { c(0.05, 0.0) };
            }
        }
        // The full generator uses the excited-first basis; permute vec(rho).
        let perm = &parts.excited_first_permutation;
        let v = crate::model::vectorize(&rho0);
        let v_perm: Vec<C64> = perm.iter().map(|&i| v[i]).collect();
        for &t in &[0.3, 2.0, 8.0] {
            let state = matrix_exp(&parts.full_lindbladian, t).unwrap().matvec(&v_perm);
            // Undo the permutation to reassemble rho(t).
            let mut naive = vec![c(0.0, 0.0); 16];
            for (k, &idx) in perm.iter().enumerate() {
                naive[idx] = state[k];
            }
            let rho_t = crate::model::unvectorize(&naive).unwrap();
            let tr = rho_t.trace();
            assert!((tr - c(1.0, 0.0)).norm() < 1e-10, "trace drift {tr} at t={t}");
            assert!(rho_t.sub(&rho_t.dagger()).max_abs() < 1e-10);
            let evs = eig(&rho_t).unwrap().eigenvalues;
            for e in evs {
                assert!(e.re > -1e-9, "negative population {e} at t={t}");
            }
        }
    }

    #[test]
    fn effective_evolution_population_decreases() {
        let parts = qubit_ep_parts(0.25);
        let rho0 = CMatrix::from_real_rows(vec![vec![0.6, 0.2], vec![0.2, 0.4]]);
        let table = evolve(&parts.lindbladian_eff, &rho0, &time_grid(10.0, 60)).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let total = table.populations[0][k] + table.populations[1][k];
            assert!(total <= last + 1e-9, "population grew at step {k}");
            assert!(total >= -1e-9);
            last = total;
        }
    }

    #[test]
    fn qubit_ep_prefactor_is_quadratic() {
        // Coherent-only evolution at the coalescence point: the prefactor
        // e^{tau} rho_ii(tau) is a polynomial of degree 2.
        let parts = qubit_ep_parts(0.0);
        let rho0 = CMatrix::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let scale = 0.55; // tau = t (gamma_i + gamma_e) / 2
        let table =
            evolve_scaled(&parts.liouvillian_eff, &rho0, &time_grid(12.0, 200), scale).unwrap();
        assert!((table.decay_rate.unwrap() - 1.0).abs() < 1e-9);
        let fit = prefactor_degree(&table, 0, (0.0, 12.0), 6).unwrap();
        assert_eq!(fit.degree, 2, "residual {:.3e}", fit.residual);
    }

    #[test]
    fn jordan_evolution_matches_exponential_route() {
        // At the coalescence point the chain ensemble from the effective
        // Hamiltonian propagates identically to the matrix exponential.
        let parts = qubit_ep_parts(0.0);
        let eps = c(0.0, -0.275);
        let h_chain = defective_hamiltonian_chain(&parts.h_eff, eps, 2).unwrap();
        let (a, b) = liouvillian_factor_chains(&h_chain);
        let set = kron_sum_jordan_basis(&a, &b).unwrap();
        let rho0 = CMatrix::from_real_rows(vec![vec![0.8, 0.1], vec![0.1, 0.2]]);
        let times = time_grid(12.0, 50);
        let direct = evolve(&parts.liouvillian_eff, &rho0, &times).unwrap();
        let viajordan = jordan_evolve(&[set], &rho0, &times).unwrap();
        for level in 0..2 {
            for k in 0..times.len() {
                let d = (direct.populations[level][k] - viajordan.populations[level][k]).abs();
                assert!(d < 1e-9, "level {level} t={} d={d:.3e}", times[k]);
            }
        }
    }

    #[test]
    fn jordan_evolution_from_diagonalizable_spectrum() {
        // Drive detuned from the coalescence value: simple spectrum.
        let parts = Preset::QubitII { gamma_i: 0.2, gamma_e: 0.9, omega: 0.31, rate: 0.3 }
            .parts()
            .unwrap();
        let sys = eig(&parts.lindbladian_eff).unwrap();
        let sets = crate::jordan::chains_from_eigensystem(&sys);
        let rho0 = CMatrix::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let times = time_grid(8.0, 40);
        let direct = evolve(&parts.lindbladian_eff, &rho0, &times).unwrap();
        let viajordan = jordan_evolve(&sets, &rho0, &times).unwrap();
        for level in 0..2 {
            for k in 0..times.len() {
                let d = (direct.populations[level][k] - viajordan.populations[level][k]).abs();
                assert!(d < 1e-9);
            }
        }
    }

    #[test]
    fn contaminated_window_is_reported() {
        // Mixed exponentials at early times cannot fit a low-degree
        // polynomial to 1e-6; the error carries the residual floor.
        let parts = qubit_ep_parts(0.3);
        let rho0 = CMatrix::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let table =
            evolve_scaled(&parts.lindbladian_eff, &rho0, &time_grid(6.0, 120), 0.55).unwrap();
        match prefactor_degree(&table, 0, (0.0, 6.0), 3) {
            Err(Error::WindowContaminated { floor }) => assert!(floor > 1e-6),
            other => panic!("expected contamination, got {other:?}"),
        }
    }

    #[test]
    fn diagonalizable_generator_has_degree_zero_prefactor() {
        // Single decay mode: prefactor is constant.
        let gen = CMatrix::from_rows(vec![
            vec![c(-0.4, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-0.9, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.4, 0.0)],
        ]);
        let rho0 = CMatrix::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let table = evolve(&gen, &rho0, &time_grid(30.0, 100)).unwrap();
        let fit = prefactor_degree(&table, 0, (15.0, 30.0), 4).unwrap();
        assert_eq!(fit.degree, 0);
    }
}
