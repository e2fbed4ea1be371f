//! Eigenfunction decomposition of the Liouville operator for nested
//! exponential dot product spaces `H = F²_{μ₁} ⊂ H̃ = F²_{μ₂}`.
//!
//! The domain occupation kernels `Γ_ℓ ∈ H` span the approximation space. The
//! image `A_f Γ_m` is projected onto the range occupation kernels `Γ̃_j`, and
//! the result is projected back onto the `Γ_ℓ` inside `H̃`, giving the `M×M`
//! representation
//!
//! ```text
//! R = G_α̃⁻¹ · C · G_β̃⁻¹ · D
//! ```
//!
//! whose column `m` holds the `Γ`-coefficients of the projected image of
//! `Γ_m`. Eigenvectors of `R` give approximate eigenfunctions
//! `φ̂_j = Σ_ℓ V̄_{ℓj} Γ_ℓ`, and the full state observable expanded in them
//! yields the predictor `x̂(t) = Σ_j ξ̂_j e^{λ_j t} φ̂_j(x₀)`.

use faer::MatRef;

use crate::gram::{
    coordinate_moments, regularized_solve, EigenRepMatrices, GramHealth, DEFAULT_JITTER_REL,
};
use crate::linalg::{complex_condition_number, complex_solve, max_abs, to_complex};
use crate::quadrature::occupation_eval_weighted;
use crate::{c64, CMatrix, Error, Matrix, QuadratureRule, Result, SpacePair, Trajectory, TrajectorySet};

/// Relative H-norm below which eigenpairs are discarded.
pub const DEFAULT_NORM_FLOOR: f64 = 1e-10;
/// Eigenvector condition number above which the representation is
/// treated as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e12;
/// Relative imaginary residue of a prediction that triggers a warning.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub rule: QuadratureRule,
    /// Relative jitter of the regularized Gram solves.
    pub jitter_rel: f64,
    pub norm_floor: f64,
    pub defective_condition: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Simpson,
            jitter_rel: DEFAULT_JITTER_REL,
            norm_floor: DEFAULT_NORM_FLOOR,
            defective_condition: DEFECTIVE_CONDITION,
        }
    }
}

/// A fitted eigen decomposition.
#[derive(Debug, Clone)]
pub struct EigenDmdModel {
    pair: SpacePair,
    rule: QuadratureRule,
    trajectories: TrajectorySet,
    weights: Vec<Vec<f64>>,
    lambda: Vec<c64>,
    /// `M×M'` normalized eigenvectors.
    v_bar: CMatrix,
    /// `n×M'` Liouville modes.
    xi: CMatrix,
    /// `M×M` domain occupation Gram.
    g_alpha: Matrix,
}

/// Closed-form prediction on a uniform grid.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub trajectory: Trajectory,
    /// Largest `|Im x̂(t)| / max |x̂(t)|` over the grid.
    pub imaginary_residue: f64,
    /// Set when `imaginary_residue` exceeds the tolerance.
    pub warning: Option<String>,
}

fn check_pair(pair: &SpacePair) -> Result<()> {
    pair.require_exp_dot("the eigen decomposition")?;
    if !pair.check_embedding() {
        return Err(Error::InvalidParameter(format!(
            "the eigen decomposition needs μ₁ < μ₂ (got μ₁ = {}, μ₂ = {})",
            pair.domain().mu(),
            pair.range().mu()
        )));
    }
    Ok(())
}

/// `R = G_α̃⁻¹ · C · G_β̃⁻¹ · D` from assembled matrices, evaluated left to
/// right with regularized solves.
pub fn representation_from(mats: &EigenRepMatrices, jitter_rel: f64) -> Result<Matrix> {
    for (name, g) in [
        ("G_alpha_range", &mats.alpha_range),
        ("G_beta_range", &mats.beta_range),
        ("G_alpha_domain", &mats.alpha_domain),
    ] {
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
    let left = regularized_solve(mats.alpha_range.as_ref(), mats.cross.as_ref(), jitter_rel)?.x;
    // (Gα̃⁻¹ C) Gβ̃⁻¹ = ((Gβ̃⁻¹)ᵀ (Gα̃⁻¹ C)ᵀ)ᵀ with Gβ̃ symmetric
    let left_t = left.transpose().to_owned();
    let middle = regularized_solve(mats.beta_range.as_ref(), left_t.as_ref(), jitter_rel)?
        .x
        .transpose()
        .to_owned();
    Ok(&middle * &mats.endpoint)
}

/// The `M×M` finite-rank representation of the projected Liouville operator.
pub fn build_finite_rank_rep(pair: &SpacePair, set: &TrajectorySet, rule: QuadratureRule, jitter_rel: f64) -> Result<Matrix> {
    check_pair(pair)?;
    let mats = EigenRepMatrices::assemble(pair, set, rule)?;
    representation_from(&mats, jitter_rel)
}

fn quantize(v: f64, scale: f64) -> i64 {
    (v / scale * 1e10).round() as i64
}

/// Sort order: `|λ|` descending, then real part descending, then angle
/// descending. Keys are quantized so near-identical values compare equal.
fn eigen_order(lambda: &[c64]) -> Vec<usize> {
    let scale = lambda.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&a, &b| {
        let (za, zb) = (lambda[a], lambda[b]);
        quantize(zb.norm(), scale)
            .cmp(&quantize(za.norm(), scale))
            .then(quantize(zb.re, scale).cmp(&quantize(za.re, scale)))
            .then(zb.im.atan2(zb.re).total_cmp(&za.im.atan2(za.re)))
    });
    idx
}

fn bilinear_c(g: &CMatrix, a: &[c64], b: &[c64]) -> c64 {
    let mut total = c64::new(0.0, 0.0);
    for i in 0..g.nrows() {
        let mut row = c64::new(0.0, 0.0);
        for j in 0..g.ncols() {
            row += g[(i, j)] * b[j];
        }
        total += a[i] * row;
    }
    total
}

/// Fits the eigen decomposition from `set`, taken in its canonical order
/// (see [`TrajectorySet::canonical`]).
pub fn fit_eigen(pair: &SpacePair, set: &TrajectorySet, opts: &EigenOptions) -> Result<EigenDmdModel> {
    check_pair(pair)?;
    let set = &set.canonical();
    let mats = EigenRepMatrices::assemble(pair, set, opts.rule)?;
    let rep = representation_from(&mats, opts.jitter_rel)?;
    let moments = coordinate_moments(set, opts.rule)?;
    fit_from_representation(pair, set, rep.as_ref(), mats.alpha_domain, moments.as_ref(), opts)
}

fn fit_from_representation(
    pair: &SpacePair,
    set: &TrajectorySet,
    rep: MatRef<'_, f64>,
    g_alpha: Matrix,
    moments: MatRef<'_, f64>,
    opts: &EigenOptions,
) -> Result<EigenDmdModel> {
    let m = set.len();
    let (lambda_raw, vecs) = if max_abs(rep) == 0.0 {
        (vec![c64::new(0.0, 0.0); m], CMatrix::identity(m, m))
    } else {
        let evd = rep
            .eigen()
            .map_err(|e| Error::LinearAlgebra(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        ((0..m).map(|k| s[k]).collect::<Vec<_>>(), evd.U().to_owned())
    };

    let g_c = to_complex(g_alpha.as_ref());
    let column = |k: usize| -> Vec<c64> { (0..m).map(|i| vecs[(i, k)]).collect() };
    let h_norms: Vec<f64> = (0..m)
        .map(|k| {
            let v = column(k);
            let conj: Vec<c64> = v.iter().map(|z| z.conj()).collect();
            bilinear_c(&g_c, &conj, &v).re.max(0.0).sqrt()
        })
        .collect();
    let max_norm = h_norms.iter().copied().fold(0.0, f64::max);
    if !(max_norm > 0.0) {
        return Err(Error::GramNumericallyZero { max_eigenvalue: 0.0 });
    }
    let kept: Vec<usize> = eigen_order(&lambda_raw)
        .into_iter()
        .filter(|&k| h_norms[k] >= opts.norm_floor * max_norm)
        .collect();

    let mut v_bar = CMatrix::zeros(m, kept.len());
    let mut lambda = Vec::with_capacity(kept.len());
    for (c, &k) in kept.iter().enumerate() {
        let v = column(k);
        let scale = bilinear_c(&g_c, &v, &v).sqrt();
        if !(scale.norm() > 0.0) {
            return Err(Error::LinearAlgebra(format!(
                "eigenvector {c} is isotropic under the domain Gram; cannot normalize"
            )));
        }
        for i in 0..m {
            v_bar[(i, c)] = v[i] / scale;
        }
        lambda.push(lambda_raw[k]);
    }

    let condition = complex_condition_number(v_bar.as_ref())?;
    if condition > opts.defective_condition {
        return Err(Error::Defective { condition });
    }

    // ξ̂ = ((V̄ᵀ G V̄)⁻¹ V̄ᵀ Moments)ᵀ
    let vt = v_bar.transpose().to_owned();
    let normal = &vt * &g_c * &v_bar;
    let rhs = &vt * to_complex(moments);
    let coeffs = complex_solve(normal.as_ref(), rhs.as_ref())?;
    let xi = coeffs.transpose().to_owned();

    let weights = set.iter().map(|t| opts.rule.trajectory_weights(t)).collect::<Result<Vec<_>>>()?;
    Ok(EigenDmdModel { pair: *pair, rule: opts.rule, trajectories: set.clone(), weights, lambda, v_bar, xi, g_alpha })
}

impl EigenDmdModel {
    /// Reassembles a model from stored parts, indexed by the canonical order
    /// of `trajectories`.
    pub fn from_parts(
        pair: SpacePair,
        rule: QuadratureRule,
        trajectories: TrajectorySet,
        lambda: Vec<c64>,
        v_bar: CMatrix,
        xi: CMatrix,
        g_alpha: Matrix,
    ) -> Result<Self> {
        check_pair(&pair)?;
        let trajectories = trajectories.canonical();
        let m = trajectories.len();
        let r = lambda.len();
        if v_bar.nrows() != m || v_bar.ncols() != r || xi.nrows() != trajectories.dim() || xi.ncols() != r {
            return Err(Error::Model("stored eigen factors do not match the trajectory data".into()));
        }
        if g_alpha.nrows() != m || g_alpha.ncols() != m {
            return Err(Error::Model("stored domain Gram does not match the trajectory count".into()));
        }
        let weights = trajectories.iter().map(|t| rule.trajectory_weights(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { pair, rule, trajectories, weights, lambda, v_bar, xi, g_alpha })
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

    pub fn dim(&self) -> usize {
        self.trajectories.dim()
    }

    /// Eigenvalues in model order.
    pub fn lambda(&self) -> &[c64] {
        &self.lambda
    }

    pub fn v_bar(&self) -> MatRef<'_, c64> {
        self.v_bar.as_ref()
    }

    /// `n×M'` Liouville modes.
    pub fn modes(&self) -> MatRef<'_, c64> {
        self.xi.as_ref()
    }

    pub fn g_alpha(&self) -> MatRef<'_, f64> {
        self.g_alpha.as_ref()
    }

    /// `φ̂_j(x)` for every retained eigenpair.
    pub fn eval_eigenfunction(&self, x: &[f64]) -> Result<Vec<c64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let gamma: Vec<f64> = self
            .trajectories
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| occupation_eval_weighted(self.pair.domain(), t, w, x))
            .collect();
        Ok((0..self.v_bar.ncols())
            .map(|j| {
                (0..self.v_bar.nrows()).fold(c64::new(0.0, 0.0), |acc, l| acc + self.v_bar[(l, j)] * gamma[l])
            })
            .collect())
    }

    /// `x̂(t) = Σ_j ξ̂_j e^{λ_j t} φ̂_j(x₀)` before discarding the imaginary part.
    pub fn predict_complex(&self, x0: &[f64], t: f64) -> Result<Vec<c64>> {
        let phi = self.eval_eigenfunction(x0)?;
        Ok(self.state_from(&phi, t))
    }

    fn state_from(&self, phi0: &[c64], t: f64) -> Vec<c64> {
        let growth: Vec<c64> = self
            .lambda
            .iter()
            .zip(phi0)
            .map(|(l, p)| (*l * t).exp() * p)
            .collect();
        (0..self.dim())
            .map(|i| growth.iter().enumerate().fold(c64::new(0.0, 0.0), |acc, (j, g)| acc + self.xi[(i, j)] * g))
            .collect()
    }

    /// Prediction on `0, dt, …, steps·dt`.
    pub fn predict(&self, x0: &[f64], dt: f64, steps: usize) -> Result<Prediction> {
        if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
            return Err(Error::InvalidParameter(format!("need dt > 0 and at least one step (dt = {dt}, steps = {steps})")));
        }
        let phi = self.eval_eigenfunction(x0)?;
        let mut states = Vec::with_capacity(steps + 1);
        let (mut max_im, mut max_abs_re) = (0.0f64, 0.0f64);
        for s in 0..=steps {
            let z = self.state_from(&phi, s as f64 * dt);
            for v in &z {
                max_im = max_im.max(v.im.abs());
                max_abs_re = max_abs_re.max(v.re.abs());
            }
            states.push(z.iter().map(|v| v.re).collect::<Vec<_>>());
        }
        if states.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: steps as f64 * dt, norm: f64::INFINITY, bound: f64::MAX });
        }
        let imaginary_residue = if max_abs_re > 0.0 { max_im / max_abs_re } else { max_im };
        let warning = (imaginary_residue > IMAGINARY_RESIDUE_TOL).then(|| {
            let msg = format!("prediction has relative imaginary residue {imaginary_residue:.3e}");
            log::warn!("{msg}");
            msg
        });
        Ok(Prediction { trajectory: Trajectory::from_samples(0, 0.0, dt, &states)?, imaginary_residue, warning })
    }
}

/// Prediction on a uniform grid `0, dt, …, t_max`.
pub fn predict_eigen(model: &EigenDmdModel, x0: &[f64], t_max: f64, dt: f64) -> Result<Prediction> {
    let steps = (t_max / dt).round();
    if !(steps >= 1.0) || ((t_max / dt) - steps).abs() > 1e-9 * steps {
        return Err(Error::InvalidParameter(format!("dt = {dt} does not divide t_max = {t_max}")));
    }
    model.predict(x0, dt, steps as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_trajectory_bundle, SystemSpec};

    #[test]
    fn sort_order() {
        let l = vec![c64::new(1.0, 0.0), c64::new(0.0, 2.0), c64::new(0.0, -2.0), c64::new(-2.0, 0.0), c64::new(2.0, 0.0)];
        assert_eq!(eigen_order(&l), vec![4, 1, 2, 3, 0]);
    }

    #[test]
    fn zero_dynamics() {
        let spec = SystemSpec::polynomial(vec![0.0]).unwrap();
        let set = sample_trajectory_bundle(&spec, &[(0.5, 1.5)], 6, 0.1, 0.01, 2).unwrap();
        let pair = SpacePair::exp_dot(0.5, 1.0).unwrap();
        let rep = build_finite_rank_rep(&pair, &set, QuadratureRule::Simpson, DEFAULT_JITTER_REL).unwrap();
        assert_eq!(max_abs(rep.as_ref()), 0.0);
        let model = fit_eigen(&pair, &set, &EigenOptions::default()).unwrap();
        assert!(model.lambda().iter().all(|z| z.norm() == 0.0));
        let p = predict_eigen(&model, &[0.8], 1.0, 0.1).unwrap();
        let first = p.trajectory.sample(0).to_vec();
        assert!((0..p.trajectory.len()).all(|s| p.trajectory.sample(s) == first.as_slice()));
    }

    #[test]
    fn constant_single_trajectory_eigenfunction() {
        let c = 0.6;
        let traj = Trajectory::from_samples(0, 0.0, 0.1, &vec![vec![c]; 11]).unwrap();
        let set = TrajectorySet::new(vec![traj]).unwrap();
        let pair = SpacePair::exp_dot(0.5, 1.0).unwrap();
        let model = fit_eigen(&pair, &set, &EigenOptions::default()).unwrap();
        let k = |x: f64, y: f64| (0.5 * x * y).exp();
        let x = 0.3;
        let expected = 1.0 * k(x, c) / (1.0 * k(c, c)).sqrt();
        let phi = model.eval_eigenfunction(&[x]).unwrap()[0];
        assert!((phi.re.abs() - expected).abs() < 1e-12 && phi.im.abs() < 1e-14);
    }

    #[test]
    fn rejects_non_nested_pair() {
        let set = sample_trajectory_bundle(&SystemSpec::polynomial(vec![0.0, 1.0]).unwrap(), &[(0.5, 1.5)], 3, 0.1, 0.01, 0).unwrap();
        assert!(fit_eigen(&SpacePair::exp_dot(1.0, 1.0).unwrap(), &set, &EigenOptions::default()).is_err());
        assert!(fit_eigen(&SpacePair::gauss_rbf(0.5, 1.0).unwrap(), &set, &EigenOptions::default()).is_err());
    }

    #[test]
    fn normalization_and_conjugate_symmetry() {
        let spec = SystemSpec::linear(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let set = sample_trajectory_bundle(&spec, &[(-1.0, 1.0), (-1.0, 1.0)], 10, 1.0, 0.05, 5).unwrap();
        let model = fit_eigen(&SpacePair::exp_dot(0.5, 1.0).unwrap(), &set, &EigenOptions::default()).unwrap();
        let g = to_complex(model.g_alpha());
        for j in 0..model.lambda().len() {
            let v: Vec<c64> = (0..model.v_bar().nrows()).map(|i| model.v_bar()[(i, j)]).collect();
            assert!((bilinear_c(&g, &v, &v) - c64::new(1.0, 0.0)).norm() < 1e-8);
        }
        for z in model.lambda() {
            assert!(model.lambda().iter().any(|w| (w.conj() - z).norm() <= 1e-8 * z.norm().max(1.0)));
        }
        let p = model.predict(&[0.3, -0.2], 0.05, 20).unwrap();
        assert!(p.imaginary_residue < 1e-6, "{}", p.imaginary_residue);
    }
}
