//! Gram and cross matrices of occupation kernels and kernel differences,
//! Gram-based orthonormalization, and regularized solves.
//!
//! All matrices are indexed by trajectory position in the input
//! [`TrajectorySet`]. Entries are computed in parallel, each with a fixed
//! summation order, so results do not depend on the thread count.

use faer::linalg::solvers::Solve;
use faer::{MatRef, Side};
use rayon::prelude::*;

use crate::kernels::rescale_center;
use crate::linalg::{bilinear, relative_asymmetry, sym_eigen_desc};
use crate::quadrature::{occupation_eval_weighted, occupation_inner_weighted};
use crate::{Error, KernelSpace, Matrix, QuadratureRule, Result, SpacePair, TrajectorySet};

/// Default relative eigenvalue floor for orthonormalization.
pub const DEFAULT_REL_FLOOR: f64 = 1e-10;
/// Default relative jitter for regularized solves.
pub const DEFAULT_JITTER_REL: f64 = 1e-12;
/// Condition number above which solves log a warning.
pub const CONDITION_WARNING: f64 = 1e12;
/// Symmetry tolerance for assembled Grams.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed negative eigenvalue, relative to the largest, for assembled Grams.
pub const PSD_TOL: f64 = 1e-10;

fn symmetric_from_upper<F>(m: usize, entry: F) -> Matrix
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| entry(i, j)).collect())
        .collect();
    let mut g = Matrix::zeros(m, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn set_weights(set: &TrajectorySet, rule: QuadratureRule) -> Result<Vec<Vec<f64>>> {
    set.iter().map(|t| rule.trajectory_weights(t)).collect()
}

/// `⟨Γ_i, Γ_j⟩` for the occupation kernels of `set` in `space`.
pub fn occupation_gram(space: &KernelSpace, set: &TrajectorySet, rule: QuadratureRule) -> Result<Matrix> {
    let w = set_weights(set, rule)?;
    let trajs = set.as_slice();
    Ok(symmetric_from_upper(set.len(), |i, j| {
        occupation_inner_weighted(space, &trajs[i], &w[i], &trajs[j], &w[j])
    }))
}

/// `G̃`: Gram of the range-space occupation kernels, `⟨Γ_i, Γ_j⟩_{H̃}`.
pub fn gram_range_occupation(space_range: &KernelSpace, set: &TrajectorySet, rule: QuadratureRule) -> Result<Matrix> {
    occupation_gram(space_range, set, rule)
}

/// `G`: Gram of the kernel differences `K(·, γ_j(T_j)) - K(·, γ_j(0))` in
/// the domain space. These are the adjoint images of the range occupation
/// kernels, and their inner products are exact kernel evaluations.
pub fn gram_domain_differences(space_domain: &KernelSpace, set: &TrajectorySet) -> Matrix {
    let trajs = set.as_slice();
    symmetric_from_upper(set.len(), |i, j| {
        let (a, b) = (&trajs[i], &trajs[j]);
        let k = |x: &[f64], y: &[f64]| space_domain.eval_unchecked(x, y);
        k(a.end(), b.end()) - k(a.end(), b.start()) - k(a.start(), b.end()) + k(a.start(), b.start())
    })
}

/// `⟨Γ_i, Γ_j⟩_{H̃}` for the *domain* occupation kernels, computed through the
/// center rescaling `Γ_γ = Γ̃_{(μ₁/μ₂)γ}` of exponential dot product kernels.
pub fn gram_domain_occ_in_range(pair: &SpacePair, set: &TrajectorySet, rule: QuadratureRule) -> Result<Matrix> {
    pair.require_exp_dot("domain occupation Gram in the range space")?;
    let scaled = set.try_map(|t| rescale_center(pair, t))?;
    occupation_gram(pair.range(), &scaled, rule)
}

/// `D` with entry `(j, m) = Γ_m(γ_j(T_j)) - Γ_m(γ_j(0))`, the domain
/// occupation kernels evaluated at trajectory endpoints.
pub fn endpoint_differences(space_domain: &KernelSpace, set: &TrajectorySet, rule: QuadratureRule) -> Result<Matrix> {
    let w = set_weights(set, rule)?;
    let trajs = set.as_slice();
    let m = set.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            (0..m)
                .map(|k| {
                    occupation_eval_weighted(space_domain, &trajs[k], &w[k], trajs[j].end())
                        - occupation_eval_weighted(space_domain, &trajs[k], &w[k], trajs[j].start())
                })
                .collect()
        })
        .collect();
    Ok(Matrix::from_fn(m, m, |j, k| rows[j][k]))
}

/// `M×n` matrix of endpoint coordinate differences `γ_ℓ(T_ℓ) - γ_ℓ(0)`.
pub fn endpoint_displacements(set: &TrajectorySet) -> Matrix {
    Matrix::from_fn(set.len(), set.dim(), |l, i| set[l].end()[i] - set[l].start()[i])
}

/// `M×n` matrix of coordinate moments `∫ γ_ℓ(t) dt`.
pub fn coordinate_moments(set: &TrajectorySet, rule: QuadratureRule) -> Result<Matrix> {
    let w = set_weights(set, rule)?;
    Ok(Matrix::from_fn(set.len(), set.dim(), |l, i| {
        w[l].iter().enumerate().map(|(s, ws)| ws * set[l].sample(s)[i]).sum()
    }))
}

/// Symmetry and positive-semidefiniteness diagnostics of an assembled Gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramHealth {
    pub relative_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl GramHealth {
    pub fn of(g: MatRef<'_, f64>) -> Result<Self> {
        let (vals, _) = sym_eigen_desc(g)?;
        Ok(Self {
            relative_asymmetry: relative_asymmetry(g),
            min_eigenvalue: vals.last().copied().unwrap_or(0.0),
            max_eigenvalue: vals.first().copied().unwrap_or(0.0),
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.relative_asymmetry <= SYMMETRY_TOL
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL * self.max_eigenvalue.max(0.0)
    }

    pub fn is_healthy(&self) -> bool {
        self.is_symmetric() && self.is_psd()
    }
}

/// The two Grams of the singular decomposition.
#[derive(Debug, Clone)]
pub struct GramBundle {
    /// `G`: kernel differences in the domain space.
    pub domain_differences: Matrix,
    /// `G̃`: occupation kernels in the range space.
    pub range_occupation: Matrix,
    /// Trajectory ids in matrix order.
    pub labels: Vec<u64>,
}

impl GramBundle {
    pub fn assemble(pair: &SpacePair, set: &TrajectorySet, rule: QuadratureRule) -> Result<Self> {
        Ok(Self {
            domain_differences: gram_domain_differences(pair.domain(), set),
            range_occupation: gram_range_occupation(pair.range(), set, rule)?,
            labels: set.iter().map(|t| t.id()).collect(),
        })
    }
}

/// The matrices of the projected eigen representation.
#[derive(Debug, Clone)]
pub struct EigenRepMatrices {
    /// `⟨Γ_i, Γ_j⟩_{H̃}` of domain occupation kernels.
    pub alpha_range: Matrix,
    /// Entry `(ℓ, m) = ⟨Γ̃_m, Γ_ℓ⟩_{H̃} = ⟨Γ_ℓ, Γ_m⟩_H`.
    pub cross: Matrix,
    /// `⟨Γ̃_i, Γ̃_j⟩_{H̃}`.
    pub beta_range: Matrix,
    /// Entry `(j, m) = Γ_m(γ_j(T_j)) - Γ_m(γ_j(0))`.
    pub endpoint: Matrix,
    /// `⟨Γ_i, Γ_j⟩_H`.
    pub alpha_domain: Matrix,
}

impl EigenRepMatrices {
    pub fn assemble(pair: &SpacePair, set: &TrajectorySet, rule: QuadratureRule) -> Result<Self> {
        let alpha_domain = occupation_gram(pair.domain(), set, rule)?;
        Ok(Self {
            alpha_range: gram_domain_occ_in_range(pair, set, rule)?,
            // the cross matrix coincides with the domain Gram
            cross: alpha_domain.clone(),
            beta_range: occupation_gram(pair.range(), set, rule)?,
            endpoint: endpoint_differences(pair.domain(), set, rule)?,
            alpha_domain,
        })
    }
}

/// Columns `v_j / √(v_jᵀ G v_j)` of the retained eigenvectors of a Gram.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// `M×r` coefficient matrix.
    pub basis: Matrix,
    /// Retained eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl Orthonormalized {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Orthonormalizes the functions whose Gram is `g`: eigenvalues at or above
/// `rel_floor · λ_max` are retained in descending order, and each eigenvector
/// is scaled to unit norm under `g`.
pub fn orthonormalize(g: MatRef<'_, f64>, rel_floor: f64) -> Result<Orthonormalized> {
    let (vals, vecs) = sym_eigen_desc(g)?;
    let lmax = vals.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(Error::GramNumericallyZero { max_eigenvalue: lmax });
    }
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&k| vals[k] > 0.0 && vals[k] >= rel_floor * lmax)
        .collect();
    let m = g.nrows();
    let mut basis = Matrix::zeros(m, keep.len());
    let mut eigenvalues = Vec::with_capacity(keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let v: Vec<f64> = (0..m).map(|i| vecs[(i, k)]).collect();
        let norm2 = bilinear(g, &v, &v);
        if !(norm2 > 0.0) {
            return Err(Error::GramNumericallyZero { max_eigenvalue: lmax });
        }
        let scale = norm2.sqrt().recip();
        for i in 0..m {
            basis[(i, c)] = v[i] * scale;
        }
        eigenvalues.push(vals[k]);
    }
    Ok(Orthonormalized { basis, eigenvalues })
}

/// Orthonormal bases for both Grams of a [`GramBundle`].
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    /// Orthonormalizes the domain kernel differences (`M×r₁`).
    pub v0: Matrix,
    /// Orthonormalizes the range occupation kernels (`M×r₂`).
    pub v0_tilde: Matrix,
}

impl OrthoBasis {
    pub fn from_bundle(bundle: &GramBundle, rel_floor: f64) -> Result<Self> {
        Ok(Self {
            v0: orthonormalize(bundle.domain_differences.as_ref(), rel_floor)?.basis,
            v0_tilde: orthonormalize(bundle.range_occupation.as_ref(), rel_floor)?.basis,
        })
    }

    /// Common retained rank.
    pub fn rank(&self) -> usize {
        self.v0.ncols().min(self.v0_tilde.ncols())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveRoute {
    Cholesky,
    PseudoInverse,
}

#[derive(Debug, Clone)]
pub struct RegularizedSolution {
    pub x: Matrix,
    pub route: SolveRoute,
    /// `λ_max / λ_min` of the unregularized matrix.
    pub condition: f64,
}

/// Solves `(G + jitter_rel·λ_max·I) X = B` by Cholesky, falling back to an
/// eigenvalue-truncated pseudo-inverse (floor `max(jitter_rel, 1e-10)·λ_max`)
/// when the factorization fails.
pub fn regularized_solve(g: MatRef<'_, f64>, b: MatRef<'_, f64>, jitter_rel: f64) -> Result<RegularizedSolution> {
    let m = g.nrows();
    if g.ncols() != m || b.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.nrows() });
    }
    let (vals, vecs) = sym_eigen_desc(g)?;
    let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    let lmin = vals.last().copied().unwrap_or(0.0);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if condition > CONDITION_WARNING {
        log::warn!("Gram condition number {condition:.3e} exceeds {CONDITION_WARNING:.0e}");
    }

    if lmax > 0.0 {
        let shift = jitter_rel * lmax;
        let shifted = Matrix::from_fn(m, m, |i, j| {
            0.5 * (g[(i, j)] + g[(j, i)]) + if i == j { shift } else { 0.0 }
        });
        if let Ok(llt) = shifted.llt(Side::Lower) {
            let x = llt.solve(b);
            if x.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
                return Ok(RegularizedSolution { x, route: SolveRoute::Cholesky, condition });
            }
        }
    }

    let floor = jitter_rel.max(DEFAULT_REL_FLOOR) * lmax;
    let mut x = Matrix::zeros(m, b.ncols());
    for (k, &lam) in vals.iter().enumerate() {
        if !(lam > 0.0 && lam >= floor) {
            continue;
        }
        for c in 0..b.ncols() {
            let proj: f64 = (0..m).map(|i| vecs[(i, k)] * b[(i, c)]).sum::<f64>() / lam;
            for i in 0..m {
                x[(i, c)] += proj * vecs[(i, k)];
            }
        }
    }
    Ok(RegularizedSolution { x, route: SolveRoute::PseudoInverse, condition })
}
