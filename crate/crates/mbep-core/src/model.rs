//! Declarative N-level open systems and their superoperators.
//!
//! A system has a ground state (level 1) acting as a population sink, N-1
//! excited levels with detunings and real coherent drives, decay rates from
//! each excited level into the sink, and optional dissipation channels acting
//! purely within the excited subspace. From such a description this module
//! builds, over any scalar backend:
//!
//! - the Hamiltonian `H` (N x N),
//! - the effective non-Hermitian Hamiltonian `H_eff` on the excited subspace,
//! - the effective Liouvillian `L'_eff = (-i H_eff) (x) 1 + 1 (x) (i H_eff*)`,
//! - the effective Lindbladian `L_eff = L'_eff + sum_k G_k L_k (x) L_k*`,
//! - the full Lindbladian on all N levels, and
//! - the projector onto the excited-subspace block.
//!
//! Vectorization convention: `|m><n|` maps to basis index `(m-1)*dim + (n-1)`
//! for 1-based level indices `m, n` (row-major flattening), so a
//! superoperator `rho -> A rho B` becomes `A (x) B^T`. The full Lindbladian
//! and projector are returned in the excited-first ordering (all excited-pair
//! components before any ground-involving component), in which the generator
//! is block lower triangular with the effective Lindbladian as its leading
//! block; the permutation back to the naive vectorization order is exposed.

use crate::error::{Error, Result};
use crate::linalg::{
    kron_sum, CMatrix, Conjugate, ExactComplex, Matrix,
};
use num::complex::Complex64 as C64;
use num::rational::BigRational;
use serde::{Deserialize, Serialize};

/// A coherent drive `Omega_ij (|i><j| + |j><i|)` between two excited levels.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DriveTerm {
    /// 1-based level index, `2 <= i < j <= n_levels`.
    pub i: usize,
    pub j: usize,
    pub omega: f64,
}

/// A dissipation channel acting within the excited subspace.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IntraJump {
    /// (N-1) x (N-1) complex matrix on the excited basis (levels 2..N in
    /// order), entries as `[re, im]` pairs. Embedded into the N-level system
    /// with identically zero ground row and column.
    pub matrix: Vec<Vec<(f64, f64)>>,
    pub rate: f64,
}

/// Declarative N-level model. Level 1 is the ground state; all rates are
/// nonnegative and all drives real.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OpenSystemSpec {
    pub n_levels: usize,
    /// Detunings of levels 2..N (angular-frequency units).
    pub detunings: Vec<f64>,
    #[serde(default)]
    pub drives: Vec<DriveTerm>,
    /// Decay rates of levels 2..N into the ground state.
    pub sink_rates: Vec<f64>,
    #[serde(default)]
    pub intra_jumps: Vec<IntraJump>,
}

impl OpenSystemSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_levels;
        if n < 2 {
            return Err(Error::InvalidSpec("n_levels must be at least 2".into()));
        }
        let ne = n - 1;
        if self.detunings.len() != ne {
            return Err(Error::InvalidSpec(format!(
                "expected {ne} detunings, got {}",
                self.detunings.len()
            )));
        }
        if self.sink_rates.len() != ne {
            return Err(Error::InvalidSpec(format!(
                "expected {ne} sink rates, got {}",
                self.sink_rates.len()
            )));
        }
        if !self.detunings.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite detuning".into()));
        }
        for &g in &self.sink_rates {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidSpec(format!("sink rate {g} must be >= 0")));
            }
        }
        for d in &self.drives {
            if !(2 <= d.i && d.i < d.j && d.j <= n) {
                return Err(Error::InvalidSpec(format!(
                    "drive indices ({}, {}) must satisfy 2 <= i < j <= {n}",
                    d.i, d.j
                )));
            }
            if !d.omega.is_finite() {
                return Err(Error::InvalidSpec("non-finite drive".into()));
            }
        }
        for jump in &self.intra_jumps {
            if !(jump.rate.is_finite() && jump.rate >= 0.0) {
                return Err(Error::InvalidSpec(format!("jump rate {} must be >= 0", jump.rate)));
            }
            if jump.matrix.len() != ne || jump.matrix.iter().any(|r| r.len() != ne) {
                return Err(Error::InvalidSpec(format!(
                    "intra jump matrix must be {ne}x{ne} on the excited subspace"
                )));
            }
            for row in &jump.matrix {
                for &(re, im) in row {
                    if !(re.is_finite() && im.is_finite()) {
                        return Err(Error::InvalidSpec("non-finite jump entry".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn to_params(&self) -> SystemParams<C64> {
        SystemParams {
            n_levels: self.n_levels,
            detunings: self.detunings.iter().map(|&x| C64::new(x, 0.0)).collect(),
            drives: self
                .drives
                .iter()
                .map(|d| (d.i, d.j, C64::new(d.omega, 0.0)))
                .collect(),
            sink_rates: self.sink_rates.iter().map(|&x| C64::new(x, 0.0)).collect(),
            intra_jumps: self
                .intra_jumps
                .iter()
                .map(|j| {
                    (
                        Matrix::from_rows(
                            j.matrix
                                .iter()
                                .map(|r| r.iter().map(|&(re, im)| C64::new(re, im)).collect())
                                .collect(),
                        ),
                        C64::new(j.rate, 0.0),
                    )
                })
                .collect(),
        }
    }

    /// Exact-rational version of the parameters; requires every parameter to
    /// be a recognizable small rational.
    pub fn to_exact_params(&self) -> Result<SystemParams<ExactComplex>> {
        let lift = |x: f64| -> Result<ExactComplex> {
            Ok(ExactComplex::real(crate::linalg::small_rational_from_f64(x)?))
        };
        Ok(SystemParams {
            n_levels: self.n_levels,
            detunings: self.detunings.iter().map(|&x| lift(x)).collect::<Result<_>>()?,
            drives: self
                .drives
                .iter()
                .map(|d| Ok((d.i, d.j, lift(d.omega)?)))
                .collect::<Result<_>>()?,
            sink_rates: self.sink_rates.iter().map(|&x| lift(x)).collect::<Result<_>>()?,
            intra_jumps: self
                .intra_jumps
                .iter()
                .map(|j| {
                    let m = Matrix::from_rows(
                        j.matrix
                            .iter()
                            .map(|r| {
                                r.iter()
                                    .map(|&(re, im)| {
                                        Ok(ExactComplex::new(
                                            crate::linalg::small_rational_from_f64(re)?.clone(),
                                            crate::linalg::small_rational_from_f64(im)?.clone(),
                                        ))
                                    })
                                    .collect::<Result<Vec<_>>>()
                            })
                            .collect::<Result<Vec<_>>>()?,
                    );
                    Ok((m, lift(j.rate)?))
                })
                .collect::<Result<_>>()?,
        })
    }
}

/// Scalar-generic system parameters consumed by the matrix builder.
#[derive(Clone, Debug)]
pub struct SystemParams<T> {
    pub n_levels: usize,
    pub detunings: Vec<T>,
    pub drives: Vec<(usize, usize, T)>,
    pub sink_rates: Vec<T>,
    /// Jump matrices on the excited basis with their rates.
    pub intra_jumps: Vec<(Matrix<T>, T)>,
}

/// All matrices derived from one model, over a generic scalar backend.
#[derive(Clone, Debug)]
pub struct SystemMatrices<T> {
    pub hamiltonian: Matrix<T>,
    pub h_eff: Matrix<T>,
    pub liouvillian_eff: Matrix<T>,
    pub lindbladian_eff: Matrix<T>,
    /// Full generator in the excited-first ordering.
    pub full_lindbladian: Matrix<T>,
    /// Excited-subspace projector in the excited-first ordering.
    pub projector: Matrix<T>,
    /// `excited_first_permutation[k]` is the naive vectorization index stored
    /// at position `k` of the reordered basis.
    pub excited_first_permutation: Vec<usize>,
}

/// Excited-first ordering of the naive vectorization indices: all pairs
/// `|m><n|` with both levels excited (in row-major order of the excited
/// block), then every ground-involving pair in naive order.
pub fn excited_first_permutation(n_levels: usize) -> Vec<usize> {
    let n = n_levels;
    let mut perm = Vec::with_capacity(n * n);
    for m in 1..n {
        for k in 1..n {
            perm.push(m * n + k);
        }
    }
    for idx in 0..n * n {
        let (m, k) = (idx / n, idx % n);
        if m == 0 || k == 0 {
            perm.push(idx);
        }
    }
    perm
}

/// Build every generator from scalar-generic parameters.
pub fn build_matrices<T: Conjugate>(p: &SystemParams<T>) -> Result<SystemMatrices<T>> {
    let n = p.n_levels;
    if n < 2 || p.detunings.len() != n - 1 || p.sink_rates.len() != n - 1 {
        return Err(Error::InvalidSpec("inconsistent dimensions".into()));
    }
    let ne = n - 1;
    let i_unit = T::i();
    let half = T::from_ratio_i64(1, 2);

    let mut h: Matrix<T> = Matrix::zeros(n, n);
    for (j, delta) in p.detunings.iter().enumerate() {
        h[(j + 1, j + 1)] = delta.clone();
    }
    for (i, j, omega) in &p.drives {
        if !(2 <= *i && i < j && *j <= n) {
            return Err(Error::InvalidSpec(format!("drive indices ({i}, {j}) out of range")));
        }
        h[(i - 1, j - 1)] = h[(i - 1, j - 1)].clone() + omega.clone();
        h[(j - 1, i - 1)] = h[(j - 1, i - 1)].clone() + omega.clone();
    }

    // All jump operators on the N-level system: sinks |1><k|, then embedded
    // intra-subspace channels (ground row and column identically zero).
    let mut jumps: Vec<(Matrix<T>, T)> = Vec::new();
    for (k, rate) in p.sink_rates.iter().enumerate() {
        let mut l: Matrix<T> = Matrix::zeros(n, n);
        l[(0, k + 1)] = T::one();
        jumps.push((l, rate.clone()));
    }
    for (small, rate) in &p.intra_jumps {
        if small.rows() != ne || small.cols() != ne {
            return Err(Error::InvalidSpec(format!(
                "intra jump matrix must be {ne}x{ne} on the excited subspace"
            )));
        }
        let mut l: Matrix<T> = Matrix::zeros(n, n);
        for r in 0..ne {
            for c in 0..ne {
                l[(r + 1, c + 1)] = small[(r, c)].clone();
            }
        }
        jumps.push((l, rate.clone()));
    }

    // H_nh = H - (i/2) sum_k G_k L_k^dag L_k
    let mut h_nh = h.clone();
    for (l, rate) in &jumps {
        let gain = l.dagger().matmul(l).scale(&(i_unit.clone() * half.clone() * rate.clone()));
        h_nh = h_nh.sub(&gain);
    }

    let h_eff = Matrix::from_fn(ne, ne, |r, c| h_nh[(r + 1, c + 1)].clone());

    // L'_eff = (-i H_eff) (x) 1 + 1 (x) (i H_eff*)
    let liouvillian_eff = kron_sum(
        &h_eff.scale(&(-i_unit.clone())),
        &h_eff.conj().scale(&i_unit.clone()),
    )?;

    let mut lindbladian_eff = liouvillian_eff.clone();
    for (small, rate) in &p.intra_jumps {
        lindbladian_eff = lindbladian_eff.add(&small.kron(&small.conj()).scale(rate));
    }

    let mut full = kron_sum(
        &h_nh.scale(&(-i_unit.clone())),
        &h_nh.conj().scale(&i_unit.clone()),
    )?;
    for (l, rate) in &jumps {
        full = full.add(&l.kron(&l.conj()).scale(rate));
    }
    let perm = excited_first_permutation(n);
    let full_lindbladian = full.permute_symmetric(&perm);

    let mut projector: Matrix<T> = Matrix::zeros(n * n, n * n);
    for k in 0..ne * ne {
        projector[(k, k)] = T::one();
    }

    Ok(SystemMatrices {
        hamiltonian: h,
        h_eff,
        liouvillian_eff,
        lindbladian_eff,
        full_lindbladian,
        projector,
        excited_first_permutation: perm,
    })
}

impl<T: Conjugate> SystemMatrices<T> {
    /// Full generator in the naive vectorization order (undo the
    /// excited-first permutation).
    pub fn full_lindbladian_naive(&self) -> Matrix<T> {
        let n2 = self.full_lindbladian.rows();
        let mut out: Matrix<T> = Matrix::zeros(n2, n2);
        for r in 0..n2 {
            for c in 0..n2 {
                let (pr, pc) = (
                    self.excited_first_permutation[r],
                    self.excited_first_permutation[c],
                );
                out[(pr, pc)] = self.full_lindbladian[(r, c)].clone();
            }
        }
        out
    }
}

/// Floating-point generators of a validated model.
pub type LindbladParts = SystemMatrices<C64>;

/// Validate and build the floating-point generators of a model.
pub fn build_parts(spec: &OpenSystemSpec) -> Result<LindbladParts> {
    spec.validate()?;
    build_matrices(&spec.to_params())
}

/// Row-major vectorization `|m><n| -> (m-1)*dim + (n-1)`.
pub fn vectorize(rho: &CMatrix) -> Vec<C64> {
    rho.data().to_vec()
}

pub fn unvectorize(v: &[C64]) -> Result<CMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::DimensionMismatch {
            expected: "square length".into(),
            actual: format!("{}", v.len()),
        });
    }
    Ok(CMatrix::from_fn(d, d, |r, c| v[r * d + c]))
}

/// Drive strength and coalescent eigenvalue of the two-level effective
/// Hamiltonian's second-order exceptional point at zero detuning:
/// `Omega = |gamma_i - gamma_e| / 4`, eigenvalue `-i (gamma_i + gamma_e) / 4`.
pub fn qubit_ep_parameters(gamma_i: f64, gamma_e: f64) -> Result<(f64, C64)> {
    if gamma_i == gamma_e {
        return Err(Error::InvalidSpec(
            "second-order coalescence needs gamma_i != gamma_e (the drive would vanish)".into(),
        ));
    }
    Ok((
        (gamma_i - gamma_e).abs() / 4.0,
        C64::new(0.0, -(gamma_i + gamma_e) / 4.0),
    ))
}

/// Triple-degeneracy condition of the three-level effective Hamiltonian with
/// equal drives and zero detunings: `gamma_i = (gamma_h + gamma_e)/2`,
/// `Omega = (gamma_h - gamma_e) / (4 sqrt(2))`, eigenvalue `-i gamma_i / 2`.
pub fn qutrit_ep_parameters(gamma_h: f64, gamma_e: f64) -> Result<(f64, f64, C64)> {
    if gamma_h == gamma_e {
        return Err(Error::InvalidSpec(
            "triple root degenerates to a diagonalizable point for gamma_h = gamma_e".into(),
        ));
    }
    let gamma_i = (gamma_h + gamma_e) / 2.0;
    let omega = (gamma_h - gamma_e) / (4.0 * std::f64::consts::SQRT_2);
    Ok((gamma_i, omega, C64::new(0.0, -gamma_i / 2.0)))
}

/// The four dissipation presets studied throughout: non-Hermitian qubit
/// (levels g, i, e) with either a directed intra-qubit decay `|e><i|` or a
/// combined bit- and phase-flip channel `sigma_y`; non-Hermitian qutrit
/// (levels g, h, i, e, with `gamma_i` pinned to `(gamma_h + gamma_e)/2`) with
/// either three equal-rate downward decays or a structured dephasing channel.
///
/// The dephasing channel enters the effective Lindbladian with an explicit
/// rate prefactor, like every other jump term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    QubitI {
        gamma_i: f64,
        gamma_e: f64,
        omega: f64,
        rate: f64,
    },
    QubitII {
        gamma_i: f64,
        gamma_e: f64,
        omega: f64,
        rate: f64,
    },
    QutritI {
        gamma_h: f64,
        gamma_e: f64,
        omega: f64,
        rate: f64,
    },
    QutritII {
        gamma_h: f64,
        gamma_e: f64,
        omega: f64,
        rate: f64,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::QubitI { .. } => "qubit_i",
            Preset::QubitII { .. } => "qubit_ii",
            Preset::QutritI { .. } => "qutrit_i",
            Preset::QutritII { .. } => "qutrit_ii",
        }
    }

    pub fn is_qubit(&self) -> bool {
        matches!(self, Preset::QubitI { .. } | Preset::QubitII { .. })
    }

    pub fn omega(&self) -> f64 {
        match *self {
            Preset::QubitI { omega, .. }
            | Preset::QubitII { omega, .. }
            | Preset::QutritI { omega, .. }
            | Preset::QutritII { omega, .. } => omega,
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            Preset::QubitI { rate, .. }
            | Preset::QubitII { rate, .. }
            | Preset::QutritI { rate, .. }
            | Preset::QutritII { rate, .. } => rate,
        }
    }

    pub fn with_omega(mut self, value: f64) -> Self {
        match &mut self {
            Preset::QubitI { omega, .. }
            | Preset::QubitII { omega, .. }
            | Preset::QutritI { omega, .. }
            | Preset::QutritII { omega, .. } => *omega = value,
        }
        self
    }

    pub fn with_rate(mut self, value: f64) -> Self {
        match &mut self {
            Preset::QubitI { rate, .. }
            | Preset::QubitII { rate, .. }
            | Preset::QutritI { rate, .. }
            | Preset::QutritII { rate, .. } => *rate = value,
        }
        self
    }

    /// Same preset with the drive tuned to the exceptional point of the
    /// underlying effective Hamiltonian.
    pub fn at_ep_drive(self) -> Result<Self> {
        let omega = match self {
            Preset::QubitI { gamma_i, gamma_e, .. } | Preset::QubitII { gamma_i, gamma_e, .. } => {
                qubit_ep_parameters(gamma_i, gamma_e)?.0
            }
            Preset::QutritI { gamma_h, gamma_e, .. } | Preset::QutritII { gamma_h, gamma_e, .. } => {
                qutrit_ep_parameters(gamma_h, gamma_e)?.1
            }
        };
        Ok(self.with_omega(omega))
    }

    pub fn spec(&self) -> Result<OpenSystemSpec> {
        let spec = match *self {
            Preset::QubitI { gamma_i, gamma_e, omega, rate } => OpenSystemSpec {
                n_levels: 3,
                detunings: vec![0.0, 0.0],
                drives: vec![DriveTerm { i: 2, j: 3, omega }],
                sink_rates: vec![gamma_i, gamma_e],
                // |e><i| on the excited basis (i, e): directed decay.
                intra_jumps: vec![IntraJump {
                    matrix: vec![vec![(0.0, 0.0), (0.0, 0.0)], vec![(1.0, 0.0), (0.0, 0.0)]],
                    rate,
                }],
            },
            Preset::QubitII { gamma_i, gamma_e, omega, rate } => OpenSystemSpec {
                n_levels: 3,
                detunings: vec![0.0, 0.0],
                drives: vec![DriveTerm { i: 2, j: 3, omega }],
                sink_rates: vec![gamma_i, gamma_e],
                // sigma_y on the excited basis (i, e).
                intra_jumps: vec![IntraJump {
                    matrix: vec![vec![(0.0, 0.0), (0.0, -1.0)], vec![(0.0, 1.0), (0.0, 0.0)]],
                    rate,
                }],
            },
            Preset::QutritI { gamma_h, gamma_e, omega, rate } => {
                let gamma_i = (gamma_h + gamma_e) / 2.0;
                let e = |r: usize, c: usize| {
                    let mut m = vec![vec![(0.0, 0.0); 3]; 3];
                    m[r][c] = (1.0, 0.0);
                    m
                };
                OpenSystemSpec {
                    n_levels: 4,
                    detunings: vec![0.0, 0.0, 0.0],
                    drives: vec![
                        DriveTerm { i: 2, j: 3, omega },
                        DriveTerm { i: 3, j: 4, omega },
                    ],
                    sink_rates: vec![gamma_h, gamma_i, gamma_e],
                    // |i><h|, |e><h|, |e><i| on the excited basis (h, i, e).
                    intra_jumps: vec![
                        IntraJump { matrix: e(1, 0), rate },
                        IntraJump { matrix: e(2, 0), rate },
                        IntraJump { matrix: e(2, 1), rate },
                    ],
                }
            }
            Preset::QutritII { gamma_h, gamma_e, omega, rate } => {
                let gamma_i = (gamma_h + gamma_e) / 2.0;
                OpenSystemSpec {
                    n_levels: 4,
                    detunings: vec![0.0, 0.0, 0.0],
                    drives: vec![
                        DriveTerm { i: 2, j: 3, omega },
                        DriveTerm { i: 3, j: 4, omega },
                    ],
                    sink_rates: vec![gamma_h, gamma_i, gamma_e],
                    // Structured dephasing channel on the excited basis
                    // (h, i, e), signs as written.
                    intra_jumps: vec![IntraJump {
                        matrix: vec![
                            vec![(0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)],
                            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
                            vec![(-1.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
                        ],
                        rate,
                    }],
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parts(&self) -> Result<LindbladParts> {
        build_parts(&self.spec()?)
    }
}

/// Parse a preset by name with a `key=value` parameter map.
pub fn preset_from_name(name: &str, get: impl Fn(&str) -> Option<f64>) -> Result<Preset> {
    let need = |k: &str| {
        get(k).ok_or_else(|| Error::InvalidSpec(format!("preset {name} needs parameter {k}")))
    };
    let rate = get("big_gamma").or_else(|| get("rate")).unwrap_or(0.0);
    match name {
        "qubit_i" | "qubit_ii" => {
            let gamma_i = need("gamma_i")?;
            let gamma_e = need("gamma_e")?;
            let omega = match get("omega") {
                Some(o) => o,
                None => qubit_ep_parameters(gamma_i, gamma_e)?.0,
            };
            Ok(if name == "qubit_i" {
                Preset::QubitI { gamma_i, gamma_e, omega, rate }
            } else {
                Preset::QubitII { gamma_i, gamma_e, omega, rate }
            })
        }
        "qutrit_i" | "qutrit_ii" => {
            let gamma_h = need("gamma_h")?;
            let gamma_e = need("gamma_e")?;
            let omega = match get("omega") {
                Some(o) => o,
                None => qutrit_ep_parameters(gamma_h, gamma_e)?.1,
            };
            Ok(if name == "qutrit_i" {
                Preset::QutritI { gamma_h, gamma_e, omega, rate }
            } else {
                Preset::QutritII { gamma_h, gamma_e, omega, rate }
            })
        }
        other => Err(Error::UnknownPreset(other.into())),
    }
}

/// Exact effective Liouvillian of the qubit at its exceptional point, for
/// rational decay rates (the drive `(gamma_e - gamma_i)/4` is then rational).
pub fn exact_qubit_liouvillian_at_ep(
    gamma_i: &BigRational,
    gamma_e: &BigRational,
) -> Result<Matrix<ExactComplex>> {
    let four = BigRational::from_integer(4.into());
    let omega = (gamma_e - gamma_i) / four;
    let params = SystemParams {
        n_levels: 3,
        detunings: vec![ExactComplex::zero(), ExactComplex::zero()],
        drives: vec![(2, 3, ExactComplex::real(omega))],
        sink_rates: vec![
            ExactComplex::real(gamma_i.clone()),
            ExactComplex::real(gamma_e.clone()),
        ],
        intra_jumps: vec![],
    };
    Ok(build_matrices(&params)?.liouvillian_eff)
}

use num::traits::Zero;
