//! Quantum geometric tensor of effective-Lindbladian eigenmodes over a drive
//! parameter, and localization of exceptional points as quantum-metric
//! divergences.
//!
//! For biorthonormal left/right eigenmatrices the tensor component along the
//! drive is
//!
//! ```text
//! Q_n = <d l_n | d r_n> - <d l_n | r_n> <l_n | d r_n>,
//! ```
//!
//! with derivatives taken by central finite differences under a fixed gauge
//! (largest-magnitude component real positive for isolated modes). Exactly
//! degenerate but diagonalizable eigenvalue clusters appear throughout these
//! systems (conjugate coherence pairs stay degenerate at every drive), and a
//! raw eigensolver returns an arbitrary basis inside such a cluster at every
//! parameter, so side-point modes are instead propagated through the
//! cluster's spectral projector, which is basis-independent and smooth. The
//! tensor is gauge-invariant; every evaluation can re-run itself under a
//! smooth random rescaling and report the deviation.

use crate::error::{Error, Result};
use crate::linalg::{eig, vec_dot, CMatrix, EigenSystem, Matrix};
use crate::model::Preset;
use num::complex::Complex64 as C64;

/// Default relative finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;
/// Eigenbasis condition number beyond which a matrix counts as defective at
/// working precision.
pub const DEFAULT_COND_LIMIT: f64 = 1e7;
/// Metric magnitude that flags a divergence candidate.
pub const DIVERGENCE_THRESHOLD: f64 = 1e4;
/// Eigenvalue distance (relative to the spectrum scale) that groups modes
/// into one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Biorthonormal eigenmodes: right vectors unit-norm with the
/// largest-magnitude component real positive, left vectors from inversion of
/// the right basis so that `l_m^dag r_n = delta_mn` to roundoff. Errors with
/// the condition number when the basis is defective at tolerance.
pub fn biorthonormal_modes(m: &CMatrix, cond_limit: f64) -> Result<EigenSystem> {
    let mut sys = eig(m)?;
    if !sys.basis_condition.is_finite() || sys.basis_condition > cond_limit {
        return Err(Error::EpProximity { cond: sys.basis_condition });
    }
    let n = sys.eigenvalues.len();
    for k in 0..n {
        let col = sys.right_vectors.col_vec(k);
        let (jmax, amp) = col
            .iter()
            .enumerate()
            .map(|(j, z)| (j, z.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if amp == 0.0 {
            return Err(Error::Numeric("zero eigenvector".into()));
        }
        let phase = col[jmax].conj() / amp;
        let fixed: Vec<C64> = col.iter().map(|z| z * phase).collect();
        sys.right_vectors.set_col(k, &fixed);
    }
    let left = sys
        .right_vectors
        .inverse()
        .map_err(|_| Error::EpProximity { cond: sys.basis_condition })?
        .dagger();
    // Biorthonormality sanity at the promised tolerance.
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let dot = vec_dot(&left.col_vec(i), &sys.right_vectors.col_vec(j));
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - C64::new(want, 0.0)).norm());
        }
    }
    if worst > 1e-10 * sys.basis_condition.max(1.0) {
        return Err(Error::EpProximity { cond: sys.basis_condition });
    }
    sys.left_vectors = Some(left);
    Ok(sys)
}

/// A rate-fixed family of effective Lindbladians over the drive strength.
pub trait DriveFamily {
    fn lindbladian_eff(&self, omega: f64) -> Result<CMatrix>;
}

/// Presets with the drive replaced by the scan variable.
pub struct PresetDriveFamily(pub Preset);

impl DriveFamily for PresetDriveFamily {
    fn lindbladian_eff(&self, omega: f64) -> Result<CMatrix> {
        Ok(self.0.with_omega(omega).parts()?.lindbladian_eff)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QgtOptions {
    /// Relative step; the absolute step is `step * max(1, |omega|)`.
    pub step: f64,
    /// Richardson-extrapolate with steps `h` and `h/2`.
    pub richardson: bool,
    /// Re-run under a smooth random gauge and record the deviation.
    pub gauge_check: bool,
    pub cond_limit: f64,
    /// Worker cap for the embarrassingly parallel scan passes (eigensolves
    /// and per-point tensors); labeling stays a sequential sweep.
    pub jobs: usize,
}

impl Default for QgtOptions {
    fn default() -> Self {
        QgtOptions {
            step: DEFAULT_STEP,
            richardson: false,
            gauge_check: true,
            cond_limit: DEFAULT_COND_LIMIT,
            jobs: 1,
        }
    }
}

/// Indexed parallel map with a worker cap; falls back to a plain loop for a
/// single job. Output order is by index, independent of scheduling.
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, jobs: usize, f: F) -> Vec<T> {
    let jobs = jobs.max(1).min(n.max(1));
    if jobs == 1 || n == 0 {
        return (0..n).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<T>>> =
        out.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                **slots[i].lock().unwrap() = Some(v);
            });
        }
    });
    out.into_iter().map(|v| v.expect("worker filled slot")).collect()
}

/// One evaluated tensor component.
#[derive(Clone, Copy, Debug)]
pub struct QgtPoint {
    pub q: C64,
    /// Condition number of the eigenbasis at the center point.
    pub cond: f64,
    /// Deviation of the gauge-transformed re-evaluation, when requested.
    pub gauge_deviation: Option<f64>,
}

/// Gauge-fixed biorthonormal frame at one parameter point: eigenvalues and
/// left/right vector pairs indexed by mode label.
#[derive(Clone, Debug)]
pub struct ModeFrame {
    pub eigenvalues: Vec<C64>,
    pub right: Vec<Vec<C64>>,
    pub left: Vec<Vec<C64>>,
    pub cond: f64,
}

fn frame_from_system(sys: &EigenSystem) -> ModeFrame {
    let n = sys.eigenvalues.len();
    let left = sys.left_vectors.as_ref().expect("biorthonormal system has left vectors");
    ModeFrame {
        eigenvalues: sys.eigenvalues.clone(),
        right: (0..n).map(|k| sys.right_vectors.col_vec(k)).collect(),
        left: (0..n).map(|k| left.col_vec(k)).collect(),
        cond: sys.basis_condition,
    }
}

fn cluster_indices(eigenvalues: &[C64], scale: f64) -> Vec<Vec<usize>> {
    let n = eigenvalues.len();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        for j in i + 1..n {
            if !assigned[j] && (eigenvalues[i] - eigenvalues[j]).norm() <= DEGENERACY_TOL * scale {
                members.push(j);
                assigned[j] = true;
            }
        }
        clusters.push(members);
    }
    clusters
}

fn assignment_min_cost(cost: impl Fn(usize, usize) -> f64, n: usize) -> Vec<usize> {
    assert!(n <= 16);
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    best[0] = 0.0;
    for mask in 0..=full {
        if best[mask].is_infinite() {
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
            let c = best[mask] + cost(i, j);
            let next = mask | (1 << j);
            if c < best[next] {
                best[next] = c;
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

/// Match center modes to side modes cluster by cluster: degenerate clusters
/// must map to equal-size side clusters, ranked by spectral-projector
/// subspace overlap with an eigenvalue-distance tiebreak. For singleton
/// clusters the subspace overlap reduces to the biorthogonal mode overlap.
fn match_clusters(center: &ModeFrame, side: &ModeFrame) -> Result<Vec<usize>> {
    let n = center.eigenvalues.len();
    let scale = center.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let cc = cluster_indices(&center.eigenvalues, scale);
    let sc = cluster_indices(&side.eigenvalues, scale);
    if cc.len() != sc.len() {
        return Err(Error::TrackingAmbiguity(format!(
            "cluster structure changed: {} vs {} clusters",
            cc.len(),
            sc.len()
        )));
    }
    let mean = |evs: &[C64], members: &[usize]| -> C64 {
        members.iter().map(|&k| evs[k]).sum::<C64>() / C64::new(members.len() as f64, 0.0)
    };
    // Projection strength of a center cluster through a side cluster.
    let proxy = |ci: &[usize], sj: &[usize]| -> f64 {
        let mut acc = 0.0;
        for &m in ci {
            let rc = &center.right[m];
            let mut proj = vec![C64::new(0.0, 0.0); rc.len()];
            for &k in sj {
                let amp = vec_dot(&side.left[k], rc);
                for (o, x) in proj.iter_mut().zip(&side.right[k]) {
                    *o += x * amp;
                }
            }
            acc += crate::linalg::vec_norm(&proj).min(2.0);
        }
        acc / ci.len() as f64
    };
    let cost = |i: usize, j: usize| -> f64 {
        if cc[i].len() != sc[j].len() {
            return 1e9;
        }
        let d = (mean(&center.eigenvalues, &cc[i]) - mean(&side.eigenvalues, &sc[j])).norm();
        (1.0 - proxy(&cc[i], &sc[j]).min(1.0)) + 0.5 * d / scale
    };
    let chosen = assignment_min_cost(cost, cc.len());
    for (i, &j) in chosen.iter().enumerate() {
        if cc[i].len() != sc[j].len() {
            return Err(Error::TrackingAmbiguity(
                "no size-compatible cluster assignment".into(),
            ));
        }
    }
    let mut matched = vec![0usize; n];
    for (i, &j) in chosen.iter().enumerate() {
        for (pos, &m) in cc[i].iter().enumerate() {
            matched[m] = sc[j][pos];
        }
    }
    Ok(matched)
}

/// Frame at a nearby parameter point aligned to a center frame: isolated
/// modes are matched and phase-aligned, exactly degenerate clusters are
/// propagated through the side cluster's spectral projector (which is basis
/// independent, hence smooth) and re-biorthonormalized.
fn aligned_frame(center: &ModeFrame, side: &ModeFrame, matched: &[usize]) -> Result<ModeFrame> {
    let n = center.eigenvalues.len();
    let scale = center.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut eigenvalues = vec![C64::new(0.0, 0.0); n];
    let mut right: Vec<Vec<C64>> = vec![Vec::new(); n];
    let mut left: Vec<Vec<C64>> = vec![Vec::new(); n];
    for cluster in cluster_indices(&center.eigenvalues, scale) {
        if cluster.len() == 1 {
            let c = cluster[0];
            let sidx = matched[c];
            eigenvalues[c] = side.eigenvalues[sidx];
            let mut rs = side.right[sidx].clone();
            let mut ls = side.left[sidx].clone();
            let overlap = vec_dot(&center.right[c], &rs);
            if overlap.norm() < 0.2 {
                return Err(Error::TrackingAmbiguity(format!(
                    "mode overlap {:.3} too small between neighboring points",
                    overlap.norm()
                )));
            }
            let phase = overlap.conj() / overlap.norm();
            for z in rs.iter_mut() {
                *z *= phase;
            }
            for z in ls.iter_mut() {
                *z *= phase;
            }
            right[c] = rs;
            left[c] = ls;
        } else {
            let d = cluster.len();
            let side_members: Vec<usize> = cluster.iter().map(|&c| matched[c]).collect();
            for w in side_members.windows(2) {
                let gap = (side.eigenvalues[w[0]] - side.eigenvalues[w[1]]).norm();
                if gap > 1e3 * DEGENERACY_TOL * scale {
                    return Err(Error::TrackingAmbiguity(format!(
                        "degenerate cluster splits by {gap:.3e} between neighboring points"
                    )));
                }
            }
            let dim = center.right[0].len();
            // r~_c = P_side r_c and l~_c^dag = l_c^dag P_side with
            // P_side = sum_k r_k l_k^dag over the side cluster.
            let mut rt: Vec<Vec<C64>> = Vec::with_capacity(d);
            let mut lt: Vec<Vec<C64>> = Vec::with_capacity(d);
            for &c in &cluster {
                let mut r_new = vec![C64::new(0.0, 0.0); dim];
                let mut l_new = vec![C64::new(0.0, 0.0); dim];
                for &k in &side_members {
                    let amp_r = vec_dot(&side.left[k], &center.right[c]);
                    for (o, x) in r_new.iter_mut().zip(&side.right[k]) {
                        *o += x * amp_r;
                    }
                    // l_new^dag += (l_c^dag r_k) l_k^dag, i.e.
                    // l_new += conj(l_c^dag r_k) l_k.
                    let amp_l = vec_dot(&center.left[c], &side.right[k]).conj();
                    for (o, x) in l_new.iter_mut().zip(&side.left[k]) {
                        *o += x * amp_l;
                    }
                }
                rt.push(r_new);
                lt.push(l_new);
            }
            // Re-biorthonormalize within the cluster: G = L^dag R and
            // l_i <- sum_j conj(G^{-1})_{i j} l_j gives l_i^dag r_k = delta.
            let mut g: CMatrix = Matrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    g[(i, j)] = vec_dot(&lt[i], &rt[j]);
                }
            }
            let g_inv = g
                .inverse()
                .map_err(|_| Error::TrackingAmbiguity("cluster overlap singular".into()))?;
            for (pos, &c) in cluster.iter().enumerate() {
                eigenvalues[c] = side.eigenvalues[side_members[pos]];
                // Normalize the right vector; counter-scale the left.
                let mut r = rt[pos].clone();
                let nrm = crate::linalg::vec_norm(&r);
                if nrm == 0.0 {
                    return Err(Error::TrackingAmbiguity("propagated vector vanished".into()));
                }
                for z in r.iter_mut() {
                    *z /= nrm;
                }
                let mut l = vec![C64::new(0.0, 0.0); rt[pos].len()];
                for j in 0..d {
                    let w = g_inv[(pos, j)].conj() * nrm;
                    for (o, x) in l.iter_mut().zip(&lt[j]) {
                        *o += x * w;
                    }
                }
                right[c] = r;
                left[c] = l;
            }
        }
    }
    Ok(ModeFrame { eigenvalues, right, left, cond: side.cond })
}

fn qgt_from_frames(
    minus: &ModeFrame,
    center: &ModeFrame,
    plus: &ModeFrame,
    mode: usize,
    h: f64,
    gauge: Option<&[C64; 3]>,
) -> C64 {
    let dim = center.right[mode].len();
    let unit = [C64::new(1.0, 0.0); 3];
    let g = gauge.unwrap_or(&unit);
    // Apply gauge e^{chi} to right, e^{-conj(chi)} to left at each point.
    let apply = |v: &[C64], f: C64| -> Vec<C64> { v.iter().map(|x| x * f).collect() };
    let rm = apply(&minus.right[mode], g[0].exp());
    let rc = apply(&center.right[mode], g[1].exp());
    let rp = apply(&plus.right[mode], g[2].exp());
    let lm = apply(&minus.left[mode], (-g[0].conj()).exp());
    let lc = apply(&center.left[mode], (-g[1].conj()).exp());
    let lp = apply(&plus.left[mode], (-g[2].conj()).exp());
    let two_h = C64::new(2.0 * h, 0.0);
    let mut dr = vec![C64::new(0.0, 0.0); dim];
    let mut dl = vec![C64::new(0.0, 0.0); dim];
    for i in 0..dim {
        dr[i] = (rp[i] - rm[i]) / two_h;
        dl[i] = (lp[i] - lm[i]) / two_h;
    }
    vec_dot(&dl, &dr) - vec_dot(&dl, &rc) * vec_dot(&lc, &dr)
}

/// Tensor component of one mode at one drive value. The mode index refers to
/// the ordering of `biorthonormal_modes` at the center point; use
/// [`metric_scan`] for consistently labeled series.
pub fn qgt_tensor(
    family: &dyn DriveFamily,
    omega: f64,
    mode: usize,
    opts: &QgtOptions,
) -> Result<QgtPoint> {
    let center_sys = biorthonormal_modes(&family.lindbladian_eff(omega)?, opts.cond_limit)?;
    let center = frame_from_system(&center_sys);
    let all = qgt_all_modes(family, omega, &center, opts)?;
    all.into_iter()
        .nth(mode)
        .ok_or_else(|| Error::InvalidSpec(format!("no mode {mode}")))
}

/// Evaluate the tensor for every mode at one drive value, sharing the two
/// (or four, with Richardson) side-point eigensolves across modes. The gauge
/// self-check reuses the same frames: the gauge enters as scalar factors.
fn qgt_all_modes(
    family: &dyn DriveFamily,
    omega: f64,
    center: &ModeFrame,
    opts: &QgtOptions,
) -> Result<Vec<QgtPoint>> {
    let n = center.eigenvalues.len();
    let h = opts.step * omega.abs().max(1.0);
    if h == 0.0 || !h.is_finite() {
        return Err(Error::InvalidSpec("step underflow".into()));
    }
    let side_frames = |hh: f64| -> Result<(ModeFrame, ModeFrame)> {
        let raw_m = frame_from_system(&biorthonormal_modes(
            &family.lindbladian_eff(omega - hh)?,
            opts.cond_limit,
        )?);
        let raw_p = frame_from_system(&biorthonormal_modes(
            &family.lindbladian_eff(omega + hh)?,
            opts.cond_limit,
        )?);
        let minus = aligned_frame(center, &raw_m, &match_clusters(center, &raw_m)?)?;
        let plus = aligned_frame(center, &raw_p, &match_clusters(center, &raw_p)?)?;
        Ok((minus, plus))
    };
    let frames_h = side_frames(h)?;
    let frames_h2 = if opts.richardson { Some(side_frames(h / 2.0)?) } else { None };

    // Fixed smooth gauge with an O(1) rescaling and O(1) derivative in the
    // drive (so the finite difference resolves it); deterministic.
    let (a, b, cc, d) = (0.37, -0.61, 0.22, 0.53);
    let chi = |w: f64| -> C64 {
        let u = (w - omega) / omega.abs().max(1.0);
        C64::new(a, b) * (0.5 + u) + C64::new(cc, d) * u * u
    };

    let mut out = Vec::with_capacity(n);
    for mode in 0..n {
        let q_at = |hh: f64, frames: &(ModeFrame, ModeFrame), gauge: Option<&[C64; 3]>| -> C64 {
            qgt_from_frames(&frames.0, center, &frames.1, mode, hh, gauge)
        };
        let q = match &frames_h2 {
            Some(fh2) => (q_at(h / 2.0, fh2, None) * 4.0 - q_at(h, &frames_h, None)) / 3.0,
            None => q_at(h, &frames_h, None),
        };
        let gauge_deviation = if opts.gauge_check {
            let gauge = [chi(omega - h), chi(omega), chi(omega + h)];
            let q_gauged = q_at(h, &frames_h, Some(&gauge));
            let q_plain = q_at(h, &frames_h, None);
            Some((q_gauged - q_plain).norm())
        } else {
            None
        };
        out.push(QgtPoint { q, cond: center.cond, gauge_deviation });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointFlag {
    Ok,
    /// Eigenbasis defective at tolerance; no value at this point.
    EpProximity,
    /// Gauge self-check deviated beyond tolerance.
    GaugeDrift,
    /// Mode tracking failed at this point.
    TrackingFailure,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::EpProximity => "ep_proximity",
            PointFlag::GaugeDrift => "gauge_drift",
            PointFlag::TrackingFailure => "tracking_failure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModePoint {
    pub lambda: C64,
    pub metric: f64,
    pub cond: f64,
    pub flag: PointFlag,
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub omega: f64,
    /// Mode labels participating in the divergence.
    pub modes: Vec<usize>,
    /// Power-law exponent of the local fit `g ~ |omega - omega_c|^{-p}`.
    pub exponent: f64,
    pub peak_metric: f64,
}

#[derive(Clone, Debug)]
pub struct QgtScan {
    pub omegas: Vec<f64>,
    /// `series[mode][grid_index]`; modes labeled by continuity from the
    /// first grid point.
    pub series: Vec<Vec<ModePoint>>,
    pub critical_points: Vec<CriticalPoint>,
    pub warnings: Vec<String>,
}

/// Scan the quantum metric of every mode over a drive grid, track mode
/// labels by overlap continuity, and localize metric divergences.
///
/// Frames are propagated along the grid: exactly degenerate clusters keep a
/// consistent smooth in-cluster basis from one point to the next (a raw
/// eigensolve returns an arbitrary basis inside such a cluster, which would
/// scramble per-mode series and fake divergences).
pub fn metric_scan(
    family: &(dyn DriveFamily + Sync),
    omegas: &[f64],
    opts: &QgtOptions,
) -> Result<QgtScan> {
    if omegas.len() < 4 {
        return Err(Error::InvalidSpec("grid too short for a scan".into()));
    }
    let mut warnings = Vec::new();

    // Raw frames per grid point; failures poison single points only.
    let raw: Vec<Result<ModeFrame>> = parallel_map(omegas.len(), opts.jobs, |g| {
        let w = omegas[g];
        family
            .lindbladian_eff(w)
            .and_then(|m| biorthonormal_modes(&m, opts.cond_limit))
            .map(|sys| frame_from_system(&sys))
    });
    let n_modes = raw
        .iter()
        .find_map(|f| f.as_ref().ok().map(|f| f.eigenvalues.len()))
        .ok_or_else(|| Error::Numeric("no grid point produced an eigensystem".into()))?;

    // Sequential labeling sweep with frame propagation.
    let mut frames: Vec<Option<ModeFrame>> = Vec::with_capacity(omegas.len());
    let mut prev: Option<ModeFrame> = None;
    for (g, raw_frame) in raw.iter().enumerate() {
        match raw_frame {
            Err(e) => {
                warnings.push(format!("omega {}: {e}", omegas[g]));
                frames.push(None);
            }
            Ok(rf) => {
                let frame = match &prev {
                    None => rf.clone(),
                    Some(p) => {
                        match match_clusters(p, rf).and_then(|m| aligned_frame(p, rf, &m)) {
                            Ok(f) => f,
                            Err(e) => {
                                warnings.push(format!(
                                    "omega {}: label continuity reset ({e})",
                                    omegas[g]
                                ));
                                rf.clone()
                            }
                        }
                    }
                };
                prev = Some(frame.clone());
                frames.push(Some(frame));
            }
        }
    }

    // Per-point tensor evaluation; side eigensolves shared across modes.
    let evaluations: Vec<Option<Result<Vec<QgtPoint>>>> =
        parallel_map(omegas.len(), opts.jobs, |g| {
            frames[g]
                .as_ref()
                .map(|frame| qgt_all_modes(family, omegas[g], frame, opts))
        });
    let mut series: Vec<Vec<ModePoint>> = vec![Vec::with_capacity(omegas.len()); n_modes];
    for (g, &w) in omegas.iter().enumerate() {
        match &frames[g] {
            Some(frame) => match evaluations[g].as_ref().expect("frame implies evaluation") {
                Ok(points) => {
                    for (label, p) in points.iter().enumerate() {
                        let flag = match p.gauge_deviation {
                            Some(dev) if dev > 1e-6 * p.q.norm().max(1.0) => PointFlag::GaugeDrift,
                            _ => PointFlag::Ok,
                        };
                        series[label].push(ModePoint {
                            lambda: frame.eigenvalues[label],
                            metric: p.q.re,
                            cond: p.cond,
                            flag,
                        });
                    }
                }
                Err(e) => {
                    let flag = match e {
                        Error::EpProximity { .. } => PointFlag::EpProximity,
                        _ => PointFlag::TrackingFailure,
                    };
                    warnings.push(format!("omega {w}: {e}"));
                    for (label, mode_series) in series.iter_mut().enumerate() {
                        mode_series.push(ModePoint {
                            lambda: frame.eigenvalues[label],
                            metric: f64::NAN,
                            cond: frame.cond,
                            flag,
                        });
                    }
                }
            },
            None => {
                for mode_series in series.iter_mut() {
                    mode_series.push(ModePoint {
                        lambda: C64::new(f64::NAN, f64::NAN),
                        metric: f64::NAN,
                        cond: f64::INFINITY,
                        flag: PointFlag::EpProximity,
                    });
                }
            }
        }
    }

    let critical_points = locate_divergences(omegas, &series, &mut warnings);
    Ok(QgtScan { omegas: omegas.to_vec(), series, critical_points, warnings })
}

/// Find per-mode local maxima above the divergence threshold and refine the
/// critical drive with three-point power-law fits on the triples around the
/// peak; candidates across modes within one grid spacing merge.
fn locate_divergences(
    omegas: &[f64],
    series: &[Vec<ModePoint>],
    warnings: &mut Vec<String>,
) -> Vec<CriticalPoint> {
    let spacing = if omegas.len() > 1 {
        (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() - 1) as f64
    } else {
        return vec![];
    };
    let mut candidates: Vec<(f64, usize, f64, f64)> = Vec::new(); // (omega_c, mode, p, peak)
    for (mode, points) in series.iter().enumerate() {
        for i in 1..points.len() - 1 {
            let g = |k: usize| points[k].metric.abs();
            if !g(i).is_finite() {
                continue;
            }
            let left_ok = !g(i - 1).is_finite() || g(i - 1) <= g(i);
            let right_ok = !g(i + 1).is_finite() || g(i + 1) <= g(i);
            if !(left_ok && right_ok && g(i) > DIVERGENCE_THRESHOLD) {
                continue;
            }
            // Fit on the triples containing the peak; keep the median.
            let mut fits: Vec<(f64, f64)> = Vec::new();
            for start in i.saturating_sub(2)..=i {
                if start + 2 >= points.len() {
                    continue;
                }
                let idx = [start, start + 1, start + 2];
                if idx.iter().any(|&k| !g(k).is_finite() || g(k) <= 0.0) {
                    continue;
                }
                if let Some(fit) = power_law_three_point(
                    [omegas[idx[0]], omegas[idx[1]], omegas[idx[2]]],
                    [g(idx[0]), g(idx[1]), g(idx[2])],
                ) {
                    fits.push(fit);
                }
            }
            if fits.is_empty() {
                warnings.push(format!(
                    "mode {mode}: power-law fit failed near omega {}; reporting the peak node",
                    omegas[i]
                ));
                candidates.push((omegas[i], mode, f64::NAN, g(i)));
                continue;
            }
            fits.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (omega_c, p) = fits[fits.len() / 2];
            if p > 0.5 {
                candidates.push((omega_c, mode, p, g(i)));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<CriticalPoint> = Vec::new();
    for (omega_c, mode, p, peak) in candidates {
        match merged.last_mut() {
            Some(cp) if (cp.omega - omega_c).abs() <= spacing => {
                if !cp.modes.contains(&mode) {
                    cp.modes.push(mode);
                }
                if peak > cp.peak_metric {
                    cp.peak_metric = peak;
                    cp.omega = omega_c;
                    cp.exponent = p;
                }
            }
            _ => merged.push(CriticalPoint {
                omega: omega_c,
                modes: vec![mode],
                exponent: p,
                peak_metric: peak,
            }),
        }
    }
    merged
}

/// Solve `g_k = C |omega_k - omega_c|^{-p}` for three samples; returns
/// `(omega_c, p)` when a consistent root exists strictly inside the triple.
fn power_law_three_point(omega: [f64; 3], g: [f64; 3]) -> Option<(f64, f64)> {
    let l: Vec<f64> = g.iter().map(|x| x.ln()).collect();
    let resid = |wc: f64| -> f64 {
        let d: Vec<f64> = omega.iter().map(|w| (w - wc).abs().max(1e-300).ln()).collect();
        (l[0] - l[1]) * (d[1] - d[2]) - (l[1] - l[2]) * (d[0] - d[1])
    };
    // Scan for a sign change, avoiding the sample nodes themselves.
    let (lo, hi) = (omega[0], omega[2]);
    let steps = 400;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for k in 1..steps {
        let w = lo + (hi - lo) * k as f64 / steps as f64;
        if omega.iter().any(|&o| (w - o).abs() < 1e-12 * (hi - lo)) {
            prev = None;
            continue;
        }
        let r = resid(w);
        if let Some((pw, pr)) = prev {
            if pr.signum() != r.signum() && pr.is_finite() && r.is_finite() {
                bracket = Some((pw, w));
                break;
            }
        }
        prev = Some((w, r));
    }
    let (mut a, mut b) = bracket?;
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if resid(a).signum() == resid(mid).signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let wc = 0.5 * (a + b);
    let d1 = (omega[0] - wc).abs().ln();
    let d2 = (omega[1] - wc).abs().ln();
    if (d1 - d2).abs() < 1e-12 {
        return None;
    }
    let p = -(l[0] - l[1]) / (d1 - d2);
    if p.is_finite() {
        Some((wc, p))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit_family(rate: f64) -> PresetDriveFamily {
        PresetDriveFamily(Preset::QubitII {
            gamma_i: 0.1,
            gamma_e: 0.9,
            omega: 0.0,
            rate,
        })
    }

    #[test]
    fn hermitian_input_left_equals_right() {
        let m = CMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(0.2, 0.3)],
            vec![c(0.2, -0.3), c(-0.5, 0.0)],
        ]);
        let sys = biorthonormal_modes(&m, DEFAULT_COND_LIMIT).unwrap();
        let left = sys.left_vectors.unwrap();
        for k in 0..2 {
            let r = sys.right_vectors.col_vec(k);
            let l = left.col_vec(k);
            let diff: f64 = r.iter().zip(&l).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(diff < 1e-10, "hermitian left/right mismatch {diff}");
        }
    }

    #[test]
    fn qubit_modes_biorthonormal_away_from_ep() {
        let fam = qubit_family(0.0);
        let m = fam.lindbladian_eff(0.35).unwrap();
        let sys = biorthonormal_modes(&m, DEFAULT_COND_LIMIT).unwrap();
        assert_eq!(sys.eigenvalues.len(), 4);
    }

    #[test]
    fn exact_ep_drive_reports_proximity() {
        let fam = qubit_family(0.0);
        let m = fam.lindbladian_eff(0.2).unwrap(); // coalescence drive
        match biorthonormal_modes(&m, DEFAULT_COND_LIMIT) {
            Err(Error::EpProximity { cond }) => assert!(cond > DEFAULT_COND_LIMIT),
            other => panic!("expected proximity error, got {other:?}"),
        }
    }

    #[test]
    fn parameter_independent_family_has_zero_tensor() {
        struct Fixed;
        impl DriveFamily for Fixed {
            fn lindbladian_eff(&self, _omega: f64) -> Result<CMatrix> {
                Ok(CMatrix::from_rows(vec![
                    vec![c(-0.5, 0.0), c(0.1, 0.2), c(0.0, 0.0)],
                    vec![c(0.0, -0.1), c(-1.0, 0.3), c(0.2, 0.0)],
                    vec![c(0.05, 0.0), c(0.0, 0.0), c(-2.0, -0.4)],
                ]))
            }
        }
        for mode in 0..3 {
            let p = qgt_tensor(&Fixed, 0.7, mode, &QgtOptions::default()).unwrap();
            assert!(p.q.norm() < 1e-10, "mode {mode}: {}", p.q);
            if let Some(dev) = p.gauge_deviation {
                assert!(dev < 1e-6);
            }
        }
    }

    #[test]
    fn gauge_invariance_away_from_divergence() {
        let fam = qubit_family(0.3);
        let opts = QgtOptions::default();
        for mode in 0..4 {
            let p = qgt_tensor(&fam, 0.35, mode, &opts).unwrap();
            let dev = p.gauge_deviation.unwrap();
            assert!(
                dev <= 1e-6 * p.q.norm().max(1.0),
                "mode {mode}: gauge deviation {dev:.3e} for q {}",
                p.q
            );
        }
    }

    #[test]
    fn conjugate_pair_modes_share_metric() {
        // Beyond the jump-shifted coalescence the middle pair is a complex
        // conjugate pair; their metrics must agree.
        let fam = qubit_family(0.3);
        let m = fam.lindbladian_eff(0.4).unwrap();
        let sys = biorthonormal_modes(&m, DEFAULT_COND_LIMIT).unwrap();
        let mut pair = Vec::new();
        for (k, ev) in sys.eigenvalues.iter().enumerate() {
            if ev.im.abs() > 1e-6 {
                pair.push(k);
            }
        }
        assert_eq!(pair.len(), 2, "{:?}", sys.eigenvalues);
        let opts = QgtOptions::default();
        let q0 = qgt_tensor(&fam, 0.4, pair[0], &opts).unwrap();
        let q1 = qgt_tensor(&fam, 0.4, pair[1], &opts).unwrap();
        assert!(
            (q0.q.re - q1.q.re).abs() <= 1e-6 * q0.q.re.abs().max(1.0),
            "{} vs {}",
            q0.q,
            q1.q
        );
    }

    #[test]
    fn metric_is_smooth_away_from_critical_drives() {
        // Second finite difference bounded on a 1e-3 grid far from any
        // divergence.
        let fam = qubit_family(0.3);
        let omegas: Vec<f64> = (0..30).map(|k| 0.3205 + 1e-3 * k as f64).collect();
        let scan = metric_scan(&fam, &omegas, &QgtOptions::default()).unwrap();
        assert!(scan.critical_points.is_empty(), "{:?}", scan.critical_points);
        for (mode, series) in scan.series.iter().enumerate() {
            for w in series.windows(3) {
                let dd = w[0].metric - 2.0 * w[1].metric + w[2].metric;
                assert!(dd.abs() < 1e3, "mode {mode}: curvature {dd:.3e}");
            }
        }
    }

    #[test]
    fn scan_results_do_not_depend_on_worker_count() {
        let fam = qubit_family(0.3);
        let omegas: Vec<f64> = (0..24).map(|k| 0.2305 + 1e-3 * k as f64).collect();
        let seq = metric_scan(&fam, &omegas, &QgtOptions { jobs: 1, ..Default::default() }).unwrap();
        let par = metric_scan(&fam, &omegas, &QgtOptions { jobs: 3, ..Default::default() }).unwrap();
        for (a, b) in seq.series.iter().zip(&par.series) {
            for (x, y) in a.iter().zip(b) {
                assert!(x.metric == y.metric || (x.metric.is_nan() && y.metric.is_nan()));
                assert_eq!(x.flag, y.flag);
            }
        }
        assert_eq!(seq.critical_points.len(), par.critical_points.len());
    }

    #[test]
    fn qubit_scan_finds_both_critical_drives() {
        let fam = qubit_family(0.3);
        // Offset grid so the exact critical drives 0.2 and 0.25 sit between
        // nodes.
        let omegas: Vec<f64> = (0..=120).map(|k| 0.1405 + 1e-3 * k as f64).collect();
        let scan = metric_scan(&fam, &omegas, &QgtOptions::default()).unwrap();
        let found: Vec<f64> = scan.critical_points.iter().map(|cp| cp.omega).collect();
        assert!(
            found.iter().any(|&w| (w - 0.2).abs() < 2e-3),
            "missing 0.2 in {found:?}"
        );
        assert!(
            found.iter().any(|&w| (w - 0.25).abs() < 2e-3),
            "missing 0.25 in {found:?}"
        );
    }

    #[test]
    fn degenerate_cluster_propagation_keeps_metric_finite() {
        // The qutrit dephasing family has permanently degenerate coherence
        // pairs; away from any critical drive the metric must stay finite
        // and smooth for every mode.
        let fam = PresetDriveFamily(Preset::QutritII {
            gamma_h: 0.8,
            gamma_e: 0.2,
            omega: 0.0,
            rate: 0.3,
        });
        let opts = QgtOptions::default();
        for mode in 0..9 {
            let p = qgt_tensor(&fam, 0.19, mode, &opts).unwrap();
            assert!(p.q.re.is_finite());
            assert!(p.q.norm() < 1e4, "mode {mode} metric {}", p.q);
            if let Some(dev) = p.gauge_deviation {
                assert!(dev <= 1e-6 * p.q.norm().max(1.0), "mode {mode} dev {dev:.3e}");
            }
        }
    }
}
