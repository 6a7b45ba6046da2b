//! Jordan structure: numerical detection with an exact oracle, block-structure
//! prediction for Kronecker sums, and explicit Jordan-chain construction.
//!
//! Numerical detection is tolerance-sensitive by nature: a defective
//! eigenvalue of block size k responds to backward error eps like eps^(1/k),
//! so the computed spectrum of an exact multi-block EP is a scattered ring
//! far wider than any fixed clustering tolerance. Detection therefore
//! agglomerates eigenvalue clusters and validates every candidate merge
//! against the rank staircase of the shifted matrix powers, which stays
//! reliable at rank tolerances around 1e-10 even when individual eigenvalues
//! have moved by 1e-3. Merges the staircase cannot account for are rejected,
//! which keeps genuinely distinct eigenvalues apart.

use crate::error::{Error, Result};
use crate::linalg::{
    eig, exact_rank, numeric_rank, vec_kron, CMatrix, Conjugate, ExactComplex, Matrix, Ring,
    XMatrix,
};
use num::complex::Complex64 as C64;
use num::traits::Zero;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// One eigenvalue cluster with its Segre characteristic (descending block
/// sizes) and Weyr characteristic (kernel-dimension increments of shifted
/// powers); the two are conjugate partitions of each other.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanStructure {
    pub eigenvalue: C64,
    pub segre: Vec<usize>,
    pub weyr: Vec<usize>,
    pub cluster_radius: f64,
}

impl JordanStructure {
    pub fn order(&self) -> usize {
        self.segre.first().copied().unwrap_or(0)
    }

    pub fn multiplicity(&self) -> usize {
        self.segre.iter().sum()
    }
}

/// Detection output; warnings carry ambiguity diagnostics instead of failing.
#[derive(Clone, Debug)]
pub struct JordanReport {
    pub structures: Vec<JordanStructure>,
    pub warnings: Vec<String>,
}

/// Conjugate partition: `out[i] = #{k : p[k] > i}`. Involutive on partitions
/// sorted in non-increasing order.
pub fn conjugate_partition(p: &[usize]) -> Vec<usize> {
    let max = p.first().copied().unwrap_or(0);
    (0..max).map(|i| p.iter().filter(|&&x| x > i).count()).collect()
}

/// Kernel dimensions of `(M - lambda)^k` for k = 1.. until stabilization.
///
/// Ranks are relative per power, with one extra rule: when the largest
/// singular value of the k-th power falls below `rank_tol` times the k-th
/// power of the shifted matrix's largest singular value, the power counts as
/// the zero matrix. Without the floor, a numerically nilpotent power would
/// have its roundoff residue ranked against itself.
fn kernel_dims(m: &CMatrix, lambda: C64, rank_tol: f64) -> Vec<usize> {
    let n = m.rows();
    let shifted = m.sub_scalar_diag(&lambda);
    let base_scale = crate::linalg::singular_values(&shifted)
        .first()
        .copied()
        .unwrap_or(0.0);
    let mut dims = Vec::new();
    let mut power = shifted.clone();
    let mut prev_rank = n;
    let mut scale_k = base_scale;
    for _ in 0..n {
        let sigma = crate::linalg::singular_values(&power);
        let smax = sigma.first().copied().unwrap_or(0.0);
        let r = if smax <= rank_tol * scale_k * n as f64 {
            0
        } else {
            let threshold = rank_tol * smax * n as f64;
            sigma.iter().filter(|&&s| s > threshold).count()
        };
        let r = r.min(prev_rank);
        dims.push(n - r);
        if r == prev_rank || r == 0 {
            break;
        }
        prev_rank = r;
        power = power.matmul(&shifted);
        scale_k *= base_scale;
    }
    dims
}

/// Dimension of the stabilized generalized kernel of `(M - lambda)`.
fn generalized_kernel_dim(m: &CMatrix, lambda: C64, rank_tol: f64) -> usize {
    kernel_dims(m, lambda, rank_tol).last().copied().unwrap_or(0)
}

/// Weyr characteristic at `lambda`, truncated to the given multiplicity.
/// Non-monotone noise artifacts are clamped and reported.
fn weyr_at(
    m: &CMatrix,
    lambda: C64,
    rank_tol: f64,
    multiplicity: usize,
    warnings: &mut Vec<String>,
) -> Vec<usize> {
    let dims = kernel_dims(m, lambda, rank_tol);
    let mut weyr = Vec::new();
    let mut prev_dim = 0usize;
    let mut total = 0usize;
    for &d in &dims {
        let mut w = d.saturating_sub(prev_dim);
        if let Some(&last) = weyr.last() {
            if w > last {
                warnings.push(format!(
                    "non-monotone rank staircase at {lambda}; clamped {w} to {last}"
                ));
                w = last;
            }
        }
        if w == 0 {
            break;
        }
        if total + w > multiplicity {
            w = multiplicity - total;
        }
        weyr.push(w);
        total += w;
        prev_dim = d;
        if total >= multiplicity {
            break;
        }
    }
    if total != multiplicity {
        warnings.push(format!(
            "rank staircase at {lambda} accounts for {total} of {multiplicity} clustered eigenvalues"
        ));
    }
    weyr
}

fn single_linkage(points: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut cluster_of: Vec<usize> = (0..n).collect();
    fn find(c: &mut Vec<usize>, i: usize) -> usize {
        if c[i] != i {
            let root = find(c, c[i]);
            c[i] = root;
        }
        c[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= tol {
                let (a, b) = (find(&mut cluster_of, i), find(&mut cluster_of, j));
                if a != b {
                    cluster_of[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut cluster_of, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn cluster_mean(evs: &[C64], members: &[usize]) -> C64 {
    let sum: C64 = members.iter().map(|&i| evs[i]).sum();
    sum / C64::new(members.len() as f64, 0.0)
}

/// Numerical Jordan structure of a square matrix.
///
/// Eigenvalues are clustered by single linkage at `cluster_tol`, then
/// clusters are agglomerated while the rank staircase at the merged mean
/// accounts for at least the combined multiplicity. Per final cluster the
/// Weyr characteristic comes from ranks of shifted-matrix powers and the
/// Segre characteristic by partition conjugation.
pub fn detect_structure(m: &CMatrix, cluster_tol: f64, rank_tol: f64) -> Result<JordanReport> {
    let n = m.require_square()?;
    if n == 0 {
        return Ok(JordanReport { structures: vec![], warnings: vec![] });
    }
    let evs = eig(m)?.eigenvalues;
    let mut clusters = single_linkage(&evs, cluster_tol);
    let merge_cap = (0.1 * (1.0 + m.frobenius_norm())).max(10.0 * cluster_tol);

    loop {
        let means: Vec<C64> = clusters.iter().map(|c| cluster_mean(&evs, c)).collect();
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = (means[a] - means[b]).norm();
                if d <= merge_cap {
                    candidates.push((d, a, b));
                }
            }
        }
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged = None;
        for &(_, a, b) in &candidates {
            let combined: Vec<usize> =
                clusters[a].iter().chain(clusters[b].iter()).copied().collect();
            let mean = cluster_mean(&evs, &combined);
            if generalized_kernel_dim(m, mean, rank_tol) >= combined.len() {
                merged = Some((a, b, combined));
                break;
            }
        }
        match merged {
            Some((a, b, combined)) => {
                clusters.remove(b);
                clusters.remove(a);
                clusters.push(combined);
            }
            None => break,
        }
    }

    let mut warnings = Vec::new();
    let mut structures: Vec<JordanStructure> = clusters
        .iter()
        .map(|members| {
            let mean = cluster_mean(&evs, members);
            let radius = members
                .iter()
                .map(|&i| (evs[i] - mean).norm())
                .fold(0.0, f64::max);
            let weyr = weyr_at(m, mean, rank_tol, members.len(), &mut warnings);
            let segre = conjugate_partition(&weyr);
            JordanStructure { eigenvalue: mean, segre, weyr, cluster_radius: radius }
        })
        .collect();
    structures.sort_by(|a, b| {
        a.eigenvalue
            .re
            .total_cmp(&b.eigenvalue.re)
            .then(a.eigenvalue.im.total_cmp(&b.eigenvalue.im))
    });

    for i in 0..structures.len() {
        for j in i + 1..structures.len() {
            let d = (structures[i].eigenvalue - structures[j].eigenvalue).norm();
            if d < 2.0 * cluster_tol {
                warnings.push(format!(
                    "clusters at {} and {} lie within twice the cluster tolerance",
                    structures[i].eigenvalue, structures[j].eigenvalue
                ));
            }
        }
    }
    Ok(JordanReport { structures, warnings })
}

/// Exact Weyr characteristic of an exact matrix at a known exact eigenvalue.
pub fn exact_weyr_staircase(m: &XMatrix, lambda: &ExactComplex) -> Vec<usize> {
    let n = m.rows();
    let shifted = m.sub_scalar_diag(lambda);
    let mut weyr = Vec::new();
    let mut power = shifted.clone();
    let mut prev_rank = n;
    for _ in 0..n {
        let r = exact_rank(&power);
        let w = prev_rank - r;
        if w == 0 {
            break;
        }
        weyr.push(w);
        if r == 0 {
            break;
        }
        prev_rank = r;
        power = power.matmul(&shifted);
    }
    weyr
}

/// Exact Jordan structure at a known exact eigenvalue (the exact backend has
/// no eigensolver; the candidate eigenvalue is supplied by construction).
pub fn detect_structure_exact(m: &XMatrix, lambda: &ExactComplex) -> JordanStructure {
    let weyr = exact_weyr_staircase(m, lambda);
    let segre = conjugate_partition(&weyr);
    JordanStructure {
        eigenvalue: lambda.to_c64(),
        segre,
        weyr,
        cluster_radius: 0.0,
    }
}

/// Predicted block structure of the effective Liouvillian built from an
/// effective Hamiltonian with the given Jordan blocks: every pair of blocks
/// `(n_i, e_i) x (n_j, e_j)` contributes blocks of sizes
/// `n_i + n_j - (2k - 1)`, `k = 1..min(n_i, n_j)`, at eigenvalue
/// `i (conj(e_j) - e_i)`; coincident eigenvalues across pairs merge.
pub fn predict_kron_sum_blocks(
    blocks_a: &[(usize, C64)],
    blocks_b: &[(usize, C64)],
    merge_tol: f64,
) -> Vec<JordanStructure> {
    let mut raw: Vec<(C64, usize)> = Vec::new();
    for &(ni, ei) in blocks_a {
        for &(nj, ej) in blocks_b {
            assert!(ni >= 1 && nj >= 1, "block sizes must be positive");
            let lambda = C64::new(0.0, 1.0) * (ej.conj() - ei);
            for k in 1..=ni.min(nj) {
                raw.push((lambda, ni + nj - (2 * k - 1)));
            }
        }
    }
    let points: Vec<C64> = raw.iter().map(|&(l, _)| l).collect();
    let clusters = single_linkage(&points, merge_tol);
    let mut out: Vec<JordanStructure> = clusters
        .into_iter()
        .map(|members| {
            let mean: C64 = members.iter().map(|&i| points[i]).sum::<C64>()
                / C64::new(members.len() as f64, 0.0);
            let mut segre: Vec<usize> = members.iter().map(|&i| raw[i].1).collect();
            segre.sort_unstable_by(|a, b| b.cmp(a));
            let weyr = conjugate_partition(&segre);
            JordanStructure { eigenvalue: mean, segre, weyr, cluster_radius: 0.0 }
        })
        .collect();
    out.sort_by(|a, b| {
        a.eigenvalue
            .re
            .total_cmp(&b.eigenvalue.re)
            .then(a.eigenvalue.im.total_cmp(&b.eigenvalue.im))
    });
    out
}

/// Exact-eigenvalue version of [`predict_kron_sum_blocks`]; coincidences are
/// merged by exact equality.
pub fn predict_kron_sum_blocks_exact(
    blocks_a: &[(usize, ExactComplex)],
    blocks_b: &[(usize, ExactComplex)],
) -> Vec<(ExactComplex, Vec<usize>)> {
    let i_unit = ExactComplex::from_ints(0, 1);
    let mut merged: Vec<(ExactComplex, Vec<usize>)> = Vec::new();
    for (ni, ei) in blocks_a {
        for (nj, ej) in blocks_b {
            let lambda = i_unit.clone() * (ej.conj() - ei.clone());
            let entry = merged.iter_mut().find(|(l, _)| *l == lambda);
            let sizes = match entry {
                Some((_, sizes)) => sizes,
                None => {
                    merged.push((lambda, Vec::new()));
                    &mut merged.last_mut().unwrap().1
                }
            };
            for k in 1..=*ni.min(nj) {
                sizes.push(ni + nj - (2 * k - 1));
            }
        }
    }
    for (_, sizes) in &mut merged {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
    }
    merged
}

/// Jordan chains at one eigenvalue: `chains[u][k]` is the grade-(k+1) vector
/// of chain `u`, so `(M - lambda) chains[u][k] = chains[u][k-1]` and the
/// grade-1 vector is annihilated.
#[derive(Clone, Debug)]
pub struct JordanChainSet<T> {
    pub eigenvalue: T,
    pub chains: Vec<Vec<Vec<T>>>,
}

impl<T: Ring> JordanChainSet<T> {
    pub fn total_vectors(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn chain_lengths(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self.chains.iter().map(|c| c.len()).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    /// Matrix whose columns are all chain vectors, grade-ascending per chain.
    pub fn basis_matrix(&self) -> Matrix<T> {
        let dim = self.chains[0][0].len();
        let mut m: Matrix<T> = Matrix::zeros(dim, self.total_vectors());
        let mut col = 0;
        for chain in &self.chains {
            for v in chain {
                assert_eq!(v.len(), dim);
                m.set_col(col, v);
                col += 1;
            }
        }
        m
    }
}

fn factorial_ratio(hi: i64, lo: i64) -> i64 {
    // hi! / lo! for hi >= lo >= 0
    assert!(hi >= lo && lo >= 0);
    ((lo + 1)..=hi).product::<i64>().max(1)
}

fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    let mut acc = 1i64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Jordan chains of the Kronecker sum `A (x) 1 + 1 (x) B` from chains of the
/// factors. Each input chain pair of lengths `(m, n)` yields `min(m, n)`
/// output chains of lengths `m + n + 1 - 2u`; the top vector of chain `u` is
///
/// ```text
/// rho_{k_u, u} = sum_{i=0}^{u-1} (-1)^i C(u-1, i)
///                [(m-1-i)! / (m-u)!] [(n-u+i)! / (n-u)!]
///                v_{m-i} (x) w_{n-u+1+i}
/// ```
///
/// and lower grades follow by repeated application of the lowering map
/// `v_i (x) w_j -> v_{i-1} (x) w_j + v_i (x) w_{j-1}` expressed on the
/// tensor-grade coefficient grid, so the construction is exact over exact
/// scalars.
pub fn kron_sum_jordan_basis<T: Ring>(
    a: &JordanChainSet<T>,
    b: &JordanChainSet<T>,
) -> Result<JordanChainSet<T>> {
    if a.chains.is_empty() || b.chains.is_empty() {
        return Err(Error::InvalidChains("empty chain set".into()));
    }
    let eigenvalue = a.eigenvalue.clone() + b.eigenvalue.clone();
    let mut chains: Vec<Vec<Vec<T>>> = Vec::new();
    for va in &a.chains {
        for wb in &b.chains {
            let m = va.len();
            let n = wb.len();
            if m == 0 || n == 0 {
                return Err(Error::InvalidChains("zero-length chain".into()));
            }
            for u in 1..=m.min(n) {
                let k_u = m + n + 1 - 2 * u;
                // Top-grade coefficients on the (grade_a, grade_b) grid.
                let mut coeff: Vec<Vec<T>> = vec![vec![T::zero(); n]; m];
                for i in 0..u {
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    let c = sign
                        * binomial((u - 1) as i64, i as i64)
                        * factorial_ratio((m - 1 - i) as i64, (m - u) as i64)
                        * factorial_ratio((n - u + i) as i64, (n - u) as i64);
                    // v_{m-i} (x) w_{n-u+1+i}, zero-based grid indices.
                    coeff[m - 1 - i][n - u + i] = T::from_i64(c);
                }
                let mut levels: Vec<Vec<Vec<T>>> = vec![coeff];
                for _ in 1..k_u {
                    let top = levels.last().unwrap();
                    let mut lower = vec![vec![T::zero(); n]; m];
                    for (i, row) in top.iter().enumerate() {
                        for (j, c) in row.iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            if i > 0 {
                                lower[i - 1][j] = lower[i - 1][j].clone() + c.clone();
                            }
                            if j > 0 {
                                lower[i][j - 1] = lower[i][j - 1].clone() + c.clone();
                            }
                        }
                    }
                    levels.push(lower);
                }
                // Realize coefficient grids as ambient vectors, grade-ascending.
                let chain: Vec<Vec<T>> = levels
                    .iter()
                    .rev()
                    .map(|grid| {
                        let dim = va[0].len() * wb[0].len();
                        let mut vec_out = vec![T::zero(); dim];
                        for (i, row) in grid.iter().enumerate() {
                            for (j, c) in row.iter().enumerate() {
                                if c.is_zero() {
                                    continue;
                                }
                                let prod = vec_kron(&va[i], &wb[j]);
                                for (o, p) in vec_out.iter_mut().zip(prod) {
                                    *o = o.clone() + c.clone() * p;
                                }
                            }
                        }
                        vec_out
                    })
                    .collect();
                chains.push(chain);
            }
        }
    }
    Ok(JordanChainSet { eigenvalue, chains })
}

/// Prepare the two Kronecker-sum factors of the effective Liouvillian from
/// Jordan chains of the effective Hamiltonian: the first factor takes grade-l
/// vectors to `i^l v_l` at eigenvalue `-i e`, the second is its entrywise
/// conjugate at `i conj(e)`.
pub fn liouvillian_factor_chains<T: Conjugate>(
    h: &JordanChainSet<T>,
) -> (JordanChainSet<T>, JordanChainSet<T>) {
    let i_unit = T::i();
    let phase = |l: usize| -> T {
        let mut p = T::one();
        for _ in 0..l {
            p = p * i_unit.clone();
        }
        p
    };
    let a_chains: Vec<Vec<Vec<T>>> = h
        .chains
        .iter()
        .map(|chain| {
            chain
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let p = phase(k + 1);
                    v.iter().map(|x| x.clone() * p.clone()).collect()
                })
                .collect()
        })
        .collect();
    let b_chains: Vec<Vec<Vec<T>>> = a_chains
        .iter()
        .map(|chain| {
            chain
                .iter()
                .map(|v| v.iter().map(|x| x.conj()).collect())
                .collect()
        })
        .collect();
    let a = JordanChainSet {
        eigenvalue: -i_unit.clone() * h.eigenvalue.clone(),
        chains: a_chains,
    };
    let b = JordanChainSet {
        eigenvalue: i_unit * h.eigenvalue.conj(),
        chains: b_chains,
    };
    (a, b)
}

/// Verify the chain recursion `(M - lambda) v_k = v_{k-1}`, grade-1
/// annihilation, and joint linear independence, within `tol` (floating).
pub fn verify_chains_numeric(
    m: &CMatrix,
    set: &JordanChainSet<C64>,
    tol: f64,
) -> Result<()> {
    let shifted = m.sub_scalar_diag(&set.eigenvalue);
    for chain in &set.chains {
        for k in 0..chain.len() {
            let image = shifted.matvec(&chain[k]);
            let target: Vec<C64> = if k == 0 {
                vec![C64::new(0.0, 0.0); image.len()]
            } else {
                chain[k - 1].clone()
            };
            let err: f64 = image
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = crate::linalg::vec_norm(&chain[k]).max(1.0);
            if err > tol * scale {
                return Err(Error::InvalidChains(format!(
                    "chain recursion residual {err:.3e} at grade {}",
                    k + 1
                )));
            }
        }
    }
    let basis = set.basis_matrix();
    let want = set.total_vectors();
    let got = numeric_rank(&basis, crate::linalg::DEFAULT_RANK_TOL);
    if got != want {
        return Err(Error::InvalidChains(format!(
            "chain vectors dependent: rank {got} of {want}"
        )));
    }
    Ok(())
}

/// Exact version of [`verify_chains_numeric`]: equalities must hold exactly.
pub fn verify_chains_exact(m: &XMatrix, set: &JordanChainSet<ExactComplex>) -> Result<()> {
    let shifted = m.sub_scalar_diag(&set.eigenvalue);
    for chain in &set.chains {
        for k in 0..chain.len() {
            let image = shifted.matvec(&chain[k]);
            let target: Vec<ExactComplex> = if k == 0 {
                vec![ExactComplex::zero(); image.len()]
            } else {
                chain[k - 1].clone()
            };
            if image != target {
                return Err(Error::InvalidChains(format!(
                    "exact chain recursion fails at grade {}",
                    k + 1
                )));
            }
        }
    }
    let basis = set.basis_matrix();
    if exact_rank(&basis) != set.total_vectors() {
        return Err(Error::InvalidChains("chain vectors exactly dependent".into()));
    }
    Ok(())
}

/// Jordan chain of a matrix known to carry a single defective block of the
/// given order at `eigenvalue`, built top-down: the top vector is the basis
/// vector maximizing `||(M - e)^(order-1) v||`, lower grades follow by
/// applying the shifted matrix, and grade-1 annihilation is checked.
pub fn defective_hamiltonian_chain(
    m: &CMatrix,
    eigenvalue: C64,
    order: usize,
) -> Result<JordanChainSet<C64>> {
    let n = m.require_square()?;
    if order == 0 || order > n {
        return Err(Error::InvalidChains(format!("order {order} out of range")));
    }
    let shifted = m.sub_scalar_diag(&eigenvalue);
    let power = shifted.pow(order - 1);
    let (top_idx, reach) = (0..n)
        .map(|j| {
            let e: Vec<C64> = (0..n)
                .map(|i| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect();
            (j, crate::linalg::vec_norm(&power.matvec(&e)))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let scale = m.frobenius_norm().max(1.0);
    if reach <= 1e-8 * scale {
        return Err(Error::InvalidChains(format!(
            "no grade-{order} vector found; the block order may be lower"
        )));
    }
    let mut chain = Vec::with_capacity(order);
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(if i == top_idx { 1.0 } else { 0.0 }, 0.0))
        .collect();
    chain.push(v.clone());
    for _ in 1..order {
        v = shifted.matvec(&v);
        chain.push(v.clone());
    }
    chain.reverse(); // ascending grade
    let residue = crate::linalg::vec_norm(&shifted.matvec(&chain[0]));
    if residue > 1e-8 * scale {
        return Err(Error::InvalidChains(format!(
            "grade-1 vector not annihilated (residue {residue:.3e}); \
             the eigenvalue or order is off"
        )));
    }
    Ok(JordanChainSet { eigenvalue, chains: vec![chain] })
}

/// Length-1 chains from a plain eigendecomposition (diagonalizable case),
/// one set per eigenvalue.
pub fn chains_from_eigensystem(sys: &crate::linalg::EigenSystem) -> Vec<JordanChainSet<C64>> {
    (0..sys.eigenvalues.len())
        .map(|k| JordanChainSet {
            eigenvalue: sys.eigenvalues[k],
            chains: vec![vec![sys.right_vectors.col_vec(k)]],
        })
        .collect()
}

/// Canonical Jordan chains of the literal block `J_n(lambda)`: the standard
/// basis vectors in ambient dimension `dim` starting at `offset`.
pub fn canonical_chain<T: Ring>(lambda: T, n: usize, dim: usize, offset: usize) -> JordanChainSet<T> {
    let mut chain = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = vec![T::zero(); dim];
        v[offset + k] = T::one();
        chain.push(v);
    }
    JordanChainSet { eigenvalue: lambda, chains: vec![chain] }
}

/// Explicit Jordan matrix `(+)_i J_{sizes[i]}(lambdas[i])`.
pub fn jordan_matrix<T: Ring>(blocks: &[(usize, T)]) -> Matrix<T> {
    let n: usize = blocks.iter().map(|(s, _)| s).sum();
    let mut m: Matrix<T> = Matrix::zeros(n, n);
    let mut at = 0;
    for (size, lambda) in blocks {
        for k in 0..*size {
            m[(at + k, at + k)] = lambda.clone();
            if k + 1 < *size {
                m[(at + k, at + k + 1)] = T::one();
            }
        }
        at += size;
    }
    m
}

/// The 9x9 two-block coupling fixture: a size-5 and a size-3 chain at the
/// same eigenvalue joined by a coupling entry `t` (plus a trailing 1x1
/// block). `t = 0` leaves blocks 5, 3, 1; any `t != 0` merges 5 and 3 into a
/// single block of size 8.
pub fn two_block_coupling_fixture<T: Ring>(lambda: T, t: T) -> Matrix<T> {
    let mut m = jordan_matrix(&[
        (5, lambda.clone()),
        (3, lambda.clone()),
        (1, lambda),
    ]);
    m[(4, 5)] = t;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn conjugate_partition_involutive() {
        for p in [vec![5, 3, 1], vec![3, 1], vec![4, 4, 2], vec![1, 1, 1], vec![2]] {
            assert_eq!(conjugate_partition(&conjugate_partition(&p)), p);
        }
        assert_eq!(conjugate_partition(&[5, 3, 1]), vec![3, 2, 2, 1, 1]);
        assert_eq!(conjugate_partition(&[3, 1]), vec![2, 1, 1]);
    }

    #[test]
    fn constructed_block_fixture_detected() {
        let m = jordan_matrix(&[(3, c(0.4, -0.2)), (1, c(0.4, -0.2))]);
        let report = detect_structure(&m, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.structures.len(), 1);
        assert_eq!(report.structures[0].segre, vec![3, 1]);
        assert!((report.structures[0].eigenvalue - c(0.4, -0.2)).norm() < 1e-9);
    }

    #[test]
    fn distinct_eigenvalues_stay_separate() {
        let m = jordan_matrix(&[(2, c(-0.5, 0.0)), (2, c(-0.45, 0.0)), (1, c(0.0, 0.3))]);
        let report = detect_structure(&m, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.structures.len(), 3);
        let mut segres: Vec<Vec<usize>> =
            report.structures.iter().map(|s| s.segre.clone()).collect();
        segres.sort();
        assert_eq!(segres, vec![vec![1], vec![2], vec![2]]);
    }

    #[test]
    fn qubit_liouvillian_at_ep_has_blocks_3_1() {
        let parts = Preset::QubitI { gamma_i: 0.2, gamma_e: 0.9, omega: 0.175, rate: 0.0 }
            .parts()
            .unwrap();
        let report =
            detect_structure(&parts.liouvillian_eff, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL)
                .unwrap();
        assert_eq!(report.structures.len(), 1, "{:?}", report.structures);
        let s = &report.structures[0];
        assert_eq!(s.segre, vec![3, 1]);
        assert!((s.eigenvalue - c(-0.55, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn qutrit_liouvillian_at_ep_has_blocks_5_3_1() {
        let (_, omega, _) = crate::model::qutrit_ep_parameters(0.4, 0.2).unwrap();
        let parts = Preset::QutritI { gamma_h: 0.4, gamma_e: 0.2, omega, rate: 0.0 }
            .parts()
            .unwrap();
        let report =
            detect_structure(&parts.liouvillian_eff, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL)
                .unwrap();
        assert_eq!(report.structures.len(), 1, "{:?}", report.structures);
        let s = &report.structures[0];
        assert_eq!(s.segre, vec![5, 3, 1]);
        assert!((s.eigenvalue - c(-0.3, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn predicted_blocks_for_single_pair() {
        let e = c(0.3, -0.1);
        let out = predict_kron_sum_blocks(&[(3, e)], &[(3, e)], 1e-9);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].segre, vec![5, 3, 1]);
        assert!((out[0].eigenvalue - c(0.0, 1.0) * (e.conj() - e)).norm() < 1e-14);

        let out = predict_kron_sum_blocks(&[(2, e)], &[(3, c(0.1, 0.2))], 1e-9);
        assert_eq!(out[0].segre, vec![4, 2]);

        let out = predict_kron_sum_blocks(&[(1, e)], &[(1, c(0.7, 0.0))], 1e-9);
        assert_eq!(out[0].segre, vec![1]);
    }

    #[test]
    fn chain_construction_small_cases() {
        // m = n = 1: one chain of length 1, the plain tensor product.
        let a = canonical_chain(c(0.2, 0.0), 1, 1, 0);
        let b = canonical_chain(c(0.0, 0.5), 1, 1, 0);
        let out = kron_sum_jordan_basis(&a, &b).unwrap();
        assert_eq!(out.chain_lengths(), vec![1]);
        assert_eq!(out.chains[0][0], vec![c(1.0, 0.0)]);

        // m = n = 2: lengths 3 and 1; second chain top is v2 (x) w1 - v1 (x) w2.
        let a = canonical_chain(c(0.0, 0.0), 2, 2, 0);
        let b = canonical_chain(c(0.0, 0.0), 2, 2, 0);
        let out = kron_sum_jordan_basis(&a, &b).unwrap();
        assert_eq!(out.chain_lengths(), vec![3, 1]);
        let top = &out.chains[1][0];
        // v2 (x) w1 has kron index 1*2+0 = 2; v1 (x) w2 index 0*2+1 = 1.
        assert_eq!(top[2], c(1.0, 0.0));
        assert_eq!(top[1], c(-1.0, 0.0));
    }

    #[test]
    fn chains_satisfy_recursion_for_all_small_sizes() {
        for m in 1..=5usize {
            for n in 1..=5usize {
                let la = ExactComplex::from_ratio(1, 3);
                let lb = ExactComplex::new(
                    num::rational::BigRational::new((-2).into(), 7.into()),
                    num::rational::BigRational::new(1.into(), 2.into()),
                );
                let a = canonical_chain(la.clone(), m, m, 0);
                let b = canonical_chain(lb.clone(), n, n, 0);
                let out = kron_sum_jordan_basis(&a, &b).unwrap();
                assert_eq!(out.chains.len(), m.min(n), "chain count");
                assert_eq!(out.total_vectors(), m * n, "vector count");
                let mut want: Vec<usize> = (1..=m.min(n)).map(|u| m + n + 1 - 2 * u).collect();
                want.sort_unstable_by(|a, b| b.cmp(a));
                assert_eq!(out.chain_lengths(), want);

                let ja = jordan_matrix(&[(m, la)]);
                let jb = jordan_matrix(&[(n, lb)]);
                let big = crate::linalg::kron_sum(&ja, &jb).unwrap();
                verify_chains_exact(&big, &out).unwrap();
            }
        }
    }

    #[test]
    fn chain_lengths_match_block_prediction() {
        for m in 1..=5usize {
            for n in 1..=5usize {
                let e1 = c(0.4, -0.7);
                let e2 = c(-0.2, 0.1);
                let predicted = predict_kron_sum_blocks(&[(m, e1)], &[(n, e2)], 1e-12);
                // Single pair with distinct map images: exactly one eigenvalue.
                assert_eq!(predicted.len(), 1);
                let mut sizes = predicted[0].segre.clone();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                let mut want: Vec<usize> = (1..=m.min(n)).map(|u| m + n + 1 - 2 * u).collect();
                want.sort_unstable_by(|a, b| b.cmp(a));
                assert_eq!(sizes, want);
            }
        }
    }

    #[test]
    fn identity_matrix_is_all_simple_blocks() {
        let report =
            detect_structure(&CMatrix::identity(4), DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL)
                .unwrap();
        assert_eq!(report.structures.len(), 1);
        assert_eq!(report.structures[0].segre, vec![1, 1, 1, 1]);
        assert!((report.structures[0].eigenvalue - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn two_block_coupling_merges_to_8_1() {
        let lam = c(-0.3, 0.0);
        for (t, want) in [
            (0.0, vec![5, 3, 1]),
            (1.0, vec![8, 1]),
        ] {
            let m = two_block_coupling_fixture(lam, c(t, 0.0));
            let report = detect_structure(&m, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(report.structures.len(), 1, "t={t}: {:?}", report.structures);
            assert_eq!(report.structures[0].segre, want, "t={t}");
            // Exact backend agrees.
            let xm = two_block_coupling_fixture(
                ExactComplex::from_ratio(-3, 10),
                ExactComplex::from_f64_exact(t, 0.0),
            );
            let xs = detect_structure_exact(&xm, &ExactComplex::from_ratio(-3, 10));
            assert_eq!(xs.segre, want, "exact t={t}");
        }
    }

    #[test]
    fn planted_exact_structures_recovered() {
        // Small planted cases with a fixed unimodular transform.
        let s_rows = vec![
            vec![1, 0, 1, 0, 0, 0],
            vec![2, 1, 0, 1, 0, 0],
            vec![0, 1, 1, 0, 1, 0],
            vec![1, 0, 2, 1, 0, 1],
            vec![0, 0, 1, 2, 1, 0],
            vec![1, 1, 0, 0, 2, 1],
        ];
        let s = Matrix::from_rows(
            s_rows
                .iter()
                .map(|r| r.iter().map(|&v| ExactComplex::from_ints(v, 0)).collect())
                .collect(),
        );
        let s_inv = s.clone().inverse_field().expect("unimodular");
        let blocks = [
            (3usize, ExactComplex::from_ratio(1, 2)),
            (2, ExactComplex::from_ints(0, 1)),
            (1, ExactComplex::from_ratio(1, 2)),
        ];
        let j = jordan_matrix(&blocks);
        let m = s.matmul(&j).matmul(&s_inv);
        let at_half = detect_structure_exact(&m, &ExactComplex::from_ratio(1, 2));
        assert_eq!(at_half.segre, vec![3, 1]);
        let at_i = detect_structure_exact(&m, &ExactComplex::from_ints(0, 1));
        assert_eq!(at_i.segre, vec![2]);
    }

    #[test]
    fn qutrit_triple_chains_build_the_5_3_1_ensemble() {
        // Third-order coalescence: the two factor chains of length 3 combine
        // into chains of lengths 5, 3, 1 satisfying the recursion on the
        // effective Liouvillian.
        let (gamma_i, omega, eps) = crate::model::qutrit_ep_parameters(0.4, 0.2).unwrap();
        let parts = Preset::QutritI { gamma_h: 0.4, gamma_e: 0.2, omega, rate: 0.0 }
            .parts()
            .unwrap();
        let h_set = defective_hamiltonian_chain(&parts.h_eff, eps, 3).unwrap();
        let (a, b) = liouvillian_factor_chains(&h_set);
        let out = kron_sum_jordan_basis(&a, &b).unwrap();
        assert_eq!(out.chain_lengths(), vec![5, 3, 1]);
        assert_eq!(out.total_vectors(), 9);
        assert!((out.eigenvalue - c(-gamma_i, 0.0)).norm() < 1e-12);
        verify_chains_numeric(&parts.liouvillian_eff, &out, 1e-8).unwrap();
    }

    #[test]
    fn liouvillian_chain_phases_produce_valid_factors() {
        // Effective qubit at its coalescence point: H - e has an explicit
        // closed-form nilpotent structure.
        let (gi, ge) = (0.2f64, 0.9f64);
        let om = (ge - gi) / 4.0;
        let h = CMatrix::from_rows(vec![
            vec![c(0.0, -gi / 2.0), c(om, 0.0)],
            vec![c(om, 0.0), c(0.0, -ge / 2.0)],
        ]);
        let eps = c(0.0, -(gi + ge) / 4.0);
        // Top-down chain: v2 = e1, v1 = (H - eps) v2.
        let shifted = h.sub_scalar_diag(&eps);
        let v2 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let v1 = shifted.matvec(&v2);
        let h_set = JordanChainSet { eigenvalue: eps, chains: vec![vec![v1, v2]] };
        let (a, b) = liouvillian_factor_chains(&h_set);
        let ja = h.scale(&c(0.0, -1.0));
        let jb = h.conj().scale(&c(0.0, 1.0));
        verify_chains_numeric(&ja, &a, 1e-12).unwrap();
        verify_chains_numeric(&jb, &b, 1e-12).unwrap();

        let lp = crate::linalg::kron_sum(&ja, &jb).unwrap();
        let out = kron_sum_jordan_basis(&a, &b).unwrap();
        assert_eq!(out.chain_lengths(), vec![3, 1]);
        verify_chains_numeric(&lp, &out, 1e-10).unwrap();
        assert!((out.eigenvalue - c(-(gi + ge) / 2.0, 0.0)).norm() < 1e-14);
    }
}
