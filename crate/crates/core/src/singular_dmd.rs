//! Singular value decomposition of the finite-rank Liouville operator.
//!
//! The adjoint maps each range-space occupation kernel `Γ̃_ℓ` to the domain
//! kernel difference `d_ℓ = K(·, γ_ℓ(T_ℓ)) - K(·, γ_ℓ(0))`. With `V₀`, `Ṽ₀`
//! orthonormalizing the `d_ℓ` and the `Γ̃_ℓ`, the adjoint restricted to the
//! span of the occupation kernels has matrix `V₀ᵀ G Ṽ₀`, which equals
//! `V₀⁻¹ Ṽ₀` when the kernel differences are linearly independent. Its SVD
//! `Û Σ̂ V̂ᵀ` yields
//!
//! - right singular functions `φ̂_j` in the domain space (from `Û`),
//! - left singular functions `ψ̂_j` in the range space (from `V̂`),
//! - singular Liouville modes `ξ̂_j = (⟨(x)_i, φ̂_j⟩)_i`,
//!
//! and the dynamics estimate `f(x) ≈ Σ_j ξ̂_j σ̂_j ψ̂_j(x)`.

use faer::MatRef;

use crate::gram::{endpoint_displacements, orthonormalize, GramBundle, GramHealth, DEFAULT_REL_FLOOR};
use crate::linalg::{bilinear, max_abs};
use crate::ode::{integrate, DEFAULT_BLOWUP_BOUND};
use crate::quadrature::occupation_eval_weighted;
use crate::{Error, KernelFamily, Matrix, QuadratureRule, Result, SpacePair, Trajectory, TrajectorySet};

/// `G` counts as zero when its largest entry is below this multiple of the
/// largest kernel diagonal value at the trajectory starts.
pub const ZERO_OPERATOR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularOptions {
    pub rule: QuadratureRule,
    /// Relative eigenvalue floor for the orthonormal bases.
    pub rel_floor: f64,
    /// Number of singular triplets kept after the SVD (all when `None`).
    pub top_k: Option<usize>,
}

impl Default for SingularOptions {
    fn default() -> Self {
        Self { rule: QuadratureRule::Simpson, rel_floor: DEFAULT_REL_FLOOR, top_k: None }
    }
}

/// A fitted singular decomposition. A model of rank zero is the zero
/// operator (all trajectories closed, e.g. `f = 0`).
#[derive(Debug, Clone)]
pub struct SingularDmdModel {
    pair: SpacePair,
    rule: QuadratureRule,
    trajectories: TrajectorySet,
    weights: Vec<Vec<f64>>,
    /// `M×r₁`, orthonormalizes the domain kernel differences.
    v0: Matrix,
    /// `M×r₂`, orthonormalizes the range occupation kernels.
    v0_tilde: Matrix,
    /// `r₁×r` left factor of the representation SVD.
    u_hat: Matrix,
    /// `r₂×r` right factor of the representation SVD.
    v_hat: Matrix,
    sigma: Vec<f64>,
    /// `M×r`: `φ̂(x) = right_coeffsᵀ d(x)`.
    right_coeffs: Matrix,
    /// `M×r`: `ψ̂(x) = left_coeffsᵀ Γ̃(x)`.
    left_coeffs: Matrix,
    /// `n×r` singular Liouville modes (zero for GaussRBF, where they are not
    /// defined).
    xi: Matrix,
    modes_available: bool,
}

/// Trajectory produced by integrating the fitted dynamics.
#[derive(Debug)]
pub struct Reconstruction {
    pub trajectory: Trajectory,
    /// Set when the blow-up guard stopped integration early; `trajectory`
    /// then holds the accepted prefix.
    pub blow_up: Option<Error>,
}

impl Reconstruction {
    pub fn is_complete(&self) -> bool {
        self.blow_up.is_none()
    }
}

fn zero_operator_scale(pair: &SpacePair, set: &TrajectorySet) -> f64 {
    set.iter()
        .map(|t| pair.domain().eval_unchecked(t.start(), t.start()).abs())
        .fold(0.0, f64::max)
        .max(1.0)
}

/// Fits the singular decomposition from `set`, taken in its canonical order
/// (see [`TrajectorySet::canonical`]).
pub fn fit_singular(pair: &SpacePair, set: &TrajectorySet, opts: &SingularOptions) -> Result<SingularDmdModel> {
    let set = set.canonical();
    let bundle = GramBundle::assemble(pair, &set, opts.rule)?;
    fit_from_bundle(pair, &set, &bundle, opts)
}

/// Fits from pre-assembled Grams (both indexed like `set`).
pub fn fit_from_bundle(
    pair: &SpacePair,
    set: &TrajectorySet,
    bundle: &GramBundle,
    opts: &SingularOptions,
) -> Result<SingularDmdModel> {
    let m = set.len();
    if bundle.domain_differences.nrows() != m || bundle.range_occupation.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: bundle.domain_differences.nrows() });
    }
    for (name, g) in [("G", &bundle.domain_differences), ("G̃", &bundle.range_occupation)] {
        let health = GramHealth::of(g.as_ref())?;
        if !health.is_healthy() {
            log::warn!(
                "{name} health: asymmetry {:.2e}, eigenvalues [{:.3e}, {:.3e}]",
                health.relative_asymmetry,
                health.min_eigenvalue,
                health.max_eigenvalue
            );
        }
    }
    let weights = set.iter().map(|t| opts.rule.trajectory_weights(t)).collect::<Result<Vec<_>>>()?;
    let g = &bundle.domain_differences;
    let g_tilde = &bundle.range_occupation;

    let modes_available = pair.family() == KernelFamily::ExpDot;
    let empty = |rows: usize| Matrix::zeros(rows, 0);
    let mut model = SingularDmdModel {
        pair: *pair,
        rule: opts.rule,
        trajectories: set.clone(),
        weights,
        v0: empty(m),
        v0_tilde: empty(m),
        u_hat: empty(0),
        v_hat: empty(0),
        sigma: Vec::new(),
        right_coeffs: empty(m),
        left_coeffs: empty(m),
        xi: empty(set.dim()),
        modes_available,
    };
    if max_abs(g.as_ref()) <= ZERO_OPERATOR_TOL * zero_operator_scale(pair, set) {
        log::info!("domain difference Gram is numerically zero; returning the zero operator");
        return Ok(model);
    }

    let v0 = orthonormalize(g.as_ref(), opts.rel_floor)?.basis;
    let v0_tilde = orthonormalize(g_tilde.as_ref(), opts.rel_floor)?.basis;
    let rep = v0.transpose() * g * &v0_tilde;
    let svd = rep
        .thin_svd()
        .map_err(|e| Error::LinearAlgebra(format!("SVD of the representation failed: {e:?}")))?;
    let mut r = rep.nrows().min(rep.ncols());
    if let Some(k) = opts.top_k {
        r = r.min(k);
    }
    let s = svd.S().column_vector();
    let (u_full, v_full) = (svd.U(), svd.V());
    let mut sigma = Vec::with_capacity(r);
    let mut u_hat = Matrix::zeros(rep.nrows(), r);
    let mut v_hat = Matrix::zeros(rep.ncols(), r);
    for j in 0..r {
        // fix the sign of each singular pair so its largest U entry is positive
        let col = u_full.col(j);
        let mut pivot = 0;
        for i in 1..col.nrows() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..rep.nrows() {
            u_hat[(i, j)] = sign * u_full[(i, j)];
        }
        for i in 0..rep.ncols() {
            v_hat[(i, j)] = sign * v_full[(i, j)];
        }
        sigma.push(s[j].max(0.0));
    }

    let g_p = v0.transpose() * g * &v0;
    let g_q = v0_tilde.transpose() * g_tilde * &v0_tilde;
    let mut right_coeffs = &v0 * &u_hat;
    let mut left_coeffs = &v0_tilde * &v_hat;
    for j in 0..r {
        let u: Vec<f64> = (0..u_hat.nrows()).map(|i| u_hat[(i, j)]).collect();
        let v: Vec<f64> = (0..v_hat.nrows()).map(|i| v_hat[(i, j)]).collect();
        let (np, nq) = (bilinear(g_p.as_ref(), &u, &u).sqrt(), bilinear(g_q.as_ref(), &v, &v).sqrt());
        if !(np > 0.0 && nq > 0.0) {
            return Err(Error::LinearAlgebra(format!("singular function {j} has zero norm")));
        }
        for i in 0..m {
            right_coeffs[(i, j)] /= np;
            left_coeffs[(i, j)] /= nq;
        }
    }
    let xi = if modes_available {
        endpoint_displacements(set).transpose() * &right_coeffs
    } else {
        Matrix::zeros(set.dim(), r)
    };
    if (0..xi.nrows()).any(|i| (0..xi.ncols()).any(|j| !xi[(i, j)].is_finite())) {
        return Err(Error::LinearAlgebra("non-finite singular modes".into()));
    }

    model.v0 = v0;
    model.v0_tilde = v0_tilde;
    model.u_hat = u_hat;
    model.v_hat = v_hat;
    model.sigma = sigma;
    model.right_coeffs = right_coeffs;
    model.left_coeffs = left_coeffs;
    model.xi = xi;
    Ok(model)
}

impl SingularDmdModel {
    /// Reassembles a model from stored factors, recomputing the derived
    /// coefficient matrices. The factors are indexed by the canonical order
    /// of `trajectories`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        pair: SpacePair,
        rule: QuadratureRule,
        trajectories: TrajectorySet,
        v0: Matrix,
        v0_tilde: Matrix,
        u_hat: Matrix,
        v_hat: Matrix,
        sigma: Vec<f64>,
    ) -> Result<Self> {
        let trajectories = trajectories.canonical();
        let m = trajectories.len();
        let r = sigma.len();
        if v0.nrows() != m || v0_tilde.nrows() != m || u_hat.nrows() != v0.ncols() || v_hat.nrows() != v0_tilde.ncols() {
            return Err(Error::Model("stored bases do not match the trajectory count".into()));
        }
        if u_hat.ncols() != r || v_hat.ncols() != r {
            return Err(Error::Model("stored singular factors do not match the rank".into()));
        }
        let bundle = GramBundle::assemble(&pair, &trajectories, rule)?;
        let weights = trajectories.iter().map(|t| rule.trajectory_weights(t)).collect::<Result<Vec<_>>>()?;
        let g_p = v0.transpose() * &bundle.domain_differences * &v0;
        let g_q = v0_tilde.transpose() * &bundle.range_occupation * &v0_tilde;
        let mut right_coeffs = &v0 * &u_hat;
        let mut left_coeffs = &v0_tilde * &v_hat;
        for j in 0..r {
            let u: Vec<f64> = (0..u_hat.nrows()).map(|i| u_hat[(i, j)]).collect();
            let v: Vec<f64> = (0..v_hat.nrows()).map(|i| v_hat[(i, j)]).collect();
            let (np, nq) = (bilinear(g_p.as_ref(), &u, &u).sqrt(), bilinear(g_q.as_ref(), &v, &v).sqrt());
            for i in 0..m {
                right_coeffs[(i, j)] /= np;
                left_coeffs[(i, j)] /= nq;
            }
        }
        let modes_available = pair.family() == KernelFamily::ExpDot;
        let xi = if modes_available {
            endpoint_displacements(&trajectories).transpose() * &right_coeffs
        } else {
            Matrix::zeros(trajectories.dim(), r)
        };
        Ok(Self {
            pair,
            rule,
            weights,
            v0,
            v0_tilde,
            u_hat,
            v_hat,
            sigma,
            right_coeffs,
            left_coeffs,
            xi,
            modes_available,
            trajectories,
        })
    }

    pub fn pair(&self) -> &SpacePair {
        &self.pair
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn trajectories(&self) -> &TrajectorySet {
        &self.trajectories
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim(&self) -> usize {
        self.trajectories.dim()
    }

    pub fn is_zero_operator(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Singular values, descending.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v0(&self) -> MatRef<'_, f64> {
        self.v0.as_ref()
    }

    pub fn v0_tilde(&self) -> MatRef<'_, f64> {
        self.v0_tilde.as_ref()
    }

    pub fn u_hat(&self) -> MatRef<'_, f64> {
        self.u_hat.as_ref()
    }

    pub fn v_hat(&self) -> MatRef<'_, f64> {
        self.v_hat.as_ref()
    }

    /// Coefficients of the right singular functions over the kernel differences.
    pub fn right_coeffs(&self) -> MatRef<'_, f64> {
        self.right_coeffs.as_ref()
    }

    /// Coefficients of the left singular functions over the range occupation kernels.
    pub fn left_coeffs(&self) -> MatRef<'_, f64> {
        self.left_coeffs.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `Γ̃_ℓ(x)` for every trajectory.
    fn range_occupation_at(&self, x: &[f64]) -> Vec<f64> {
        self.trajectories
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| occupation_eval_weighted(self.pair.range(), t, w, x))
            .collect()
    }

    /// `d_ℓ(x) = K(x, γ_ℓ(T_ℓ)) - K(x, γ_ℓ(0))` for every trajectory.
    fn differences_at(&self, x: &[f64]) -> Vec<f64> {
        let k = self.pair.domain();
        self.trajectories
            .iter()
            .map(|t| k.eval_unchecked(x, t.end()) - k.eval_unchecked(x, t.start()))
            .collect()
    }

    fn apply_transposed(coeffs: &Matrix, values: &[f64]) -> Vec<f64> {
        (0..coeffs.ncols())
            .map(|j| (0..coeffs.nrows()).map(|l| coeffs[(l, j)] * values[l]).sum())
            .collect()
    }

    /// `ψ̂_j(x)` for all retained `j`.
    pub fn eval_left_singular(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if self.is_zero_operator() {
            return Ok(Vec::new());
        }
        Ok(Self::apply_transposed(&self.left_coeffs, &self.range_occupation_at(x)))
    }

    /// `φ̂_j(x)` for all retained `j`.
    pub fn eval_right_singular(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if self.is_zero_operator() {
            return Ok(Vec::new());
        }
        Ok(Self::apply_transposed(&self.right_coeffs, &self.differences_at(x)))
    }

    /// `n×r` singular Liouville modes.
    pub fn singular_modes(&self) -> Result<MatRef<'_, f64>> {
        if !self.modes_available {
            return Err(Error::Unsupported(
                "singular Liouville modes need coordinate functions in the domain space (exponential dot product kernel)"
                    .into(),
            ));
        }
        Ok(self.xi.as_ref())
    }

    /// The dynamics estimate `Σ_j ξ̂_j σ̂_j ψ̂_j(x)`.
    pub fn vector_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.vector_field_top(x, self.rank())
    }

    /// [`Self::vector_field`] restricted to the leading `k` triplets.
    pub fn vector_field_top(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        let xi = self.singular_modes()?;
        let psi = self.eval_left_singular(x)?;
        let k = k.min(self.rank());
        Ok((0..self.dim())
            .map(|i| (0..k).map(|j| xi[(i, j)] * self.sigma[j] * psi[j]).sum())
            .collect())
    }

    /// Integrates the fitted dynamics from `x0` with `steps` RK4 steps of
    /// size `dt`, using the leading `top_k` triplets (all when `None`).
    pub fn reconstruct(
        &self,
        x0: &[f64],
        dt: f64,
        steps: usize,
        top_k: Option<usize>,
        blowup_bound: Option<f64>,
    ) -> Result<Reconstruction> {
        self.check_dim(x0)?;
        self.singular_modes()?;
        if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
            return Err(Error::InvalidParameter(format!("need dt > 0 and at least one step (dt = {dt}, steps = {steps})")));
        }
        let k = top_k.unwrap_or(self.rank()).min(self.rank());
        // f̂(x) = Bᵀ Γ̃(x) with B = left_coeffs · diag(σ) · ξᵀ
        let b = Matrix::from_fn(self.trajectories.len(), self.dim(), |l, i| {
            (0..k).map(|j| self.left_coeffs[(l, j)] * self.sigma[j] * self.xi[(i, j)]).sum()
        });
        let field = |x: &[f64]| Self::apply_transposed(&b, &self.range_occupation_at(x));
        let bound = blowup_bound.unwrap_or(DEFAULT_BLOWUP_BOUND);
        let run = integrate(field, x0, 0.0, dt, steps, bound);
        Ok(Reconstruction { trajectory: Trajectory::from_samples(0, 0.0, dt, &run.states)?, blow_up: run.blow_up })
    }
}

/// Reconstruction on a uniform grid `0, dt, …, t_max` (see
/// [`SingularDmdModel::reconstruct`]).
pub fn reconstruct_singular(
    model: &SingularDmdModel,
    x0: &[f64],
    t_max: f64,
    dt: f64,
    top_k: Option<usize>,
    blowup_bound: Option<f64>,
) -> Result<Reconstruction> {
    let steps = (t_max / dt).round();
    if !(steps >= 1.0) || ((t_max / dt) - steps).abs() > 1e-9 * steps {
        return Err(Error::InvalidParameter(format!("dt = {dt} does not divide t_max = {t_max}")));
    }
    model.reconstruct(x0, dt, steps as usize, top_k, blowup_bound)
}
