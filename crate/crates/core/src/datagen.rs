//! Synthetic dynamical systems and trajectory generation with known ground
//! truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{from_rows, mat_vec, to_rows};
use crate::ode::{integrate, DEFAULT_BLOWUP_BOUND};
use crate::{Error, Matrix, Result, Trajectory, TrajectorySet};

/// Largest supported degree of a 1-D polynomial field.
pub const MAX_POLY_DEGREE: usize = 10;

/// A vector field `ẋ = f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    /// `f(x) = A x`.
    Linear(Matrix),
    /// `f(x) = Σ_k c_k x^k` in one dimension.
    Polynomial1D(Vec<f64>),
    /// `ẋ₀ = x₁`, `ẋ₁ = μ(1 - x₀²)x₁ - x₀`.
    VanDerPol(f64),
}

impl SystemSpec {
    pub fn linear(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let spec = Self::Linear(from_rows(rows, n)?);
        spec.check()?;
        Ok(spec)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let spec = Self::Polynomial1D(coeffs);
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Linear(a) => {
                if a.nrows() != a.ncols() || a.nrows() == 0 {
                    return Err(Error::InvalidParameter("linear system matrix must be square".into()));
                }
                if !to_rows(a.as_ref()).iter().all(|r| finite(r)) {
                    return Err(Error::InvalidParameter("non-finite system matrix".into()));
                }
            }
            Self::Polynomial1D(c) => {
                if c.len() > MAX_POLY_DEGREE + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial degree {} exceeds {MAX_POLY_DEGREE}",
                        c.len() - 1
                    )));
                }
                if !finite(c) {
                    return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
                }
            }
            Self::VanDerPol(mu) => {
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter("non-finite Van der Pol parameter".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Linear(a) => a.nrows(),
            Self::Polynomial1D(_) => 1,
            Self::VanDerPol(_) => 2,
        }
    }

    /// `f(x)`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear(a) => mat_vec(a.as_ref(), x),
            Self::Polynomial1D(c) => vec![c.iter().rev().fold(0.0, |acc, ck| acc * x[0] + ck)],
            Self::VanDerPol(mu) => vec![x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]],
        }
    }
}

/// RK4 simulation of `spec` from `x0` over `[0, T]`, sampled every `dt`.
pub fn simulate(spec: &SystemSpec, x0: &[f64], horizon: f64, dt: f64) -> Result<Trajectory> {
    simulate_with_id(spec, x0, horizon, dt, 0)
}

fn simulate_with_id(spec: &SystemSpec, x0: &[f64], horizon: f64, dt: f64, id: u64) -> Result<Trajectory> {
    spec.check()?;
    if x0.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x0.len() });
    }
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need T > 0 and dt > 0, got T = {horizon}, dt = {dt}")));
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps.max(1.0) || steps < 1.0 {
        return Err(Error::InvalidParameter(format!("dt = {dt} does not divide T = {horizon}")));
    }
    let run = integrate(|x| spec.rhs(x), x0, 0.0, dt, steps as usize, DEFAULT_BLOWUP_BOUND);
    if let Some(err) = run.blow_up {
        return Err(err);
    }
    Trajectory::from_samples(id, 0.0, dt, &run.states)
}

/// `count` trajectories from initial conditions drawn uniformly from the box
/// `x0_box` (one `(lo, hi)` per coordinate) with a seeded ChaCha generator.
pub fn sample_trajectory_bundle(
    spec: &SystemSpec,
    x0_box: &[(f64, f64)],
    count: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectorySet> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if x0_box.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x0_box.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<Vec<f64>> = (0..count)
        .map(|_| x0_box.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo }).collect())
        .collect();
    let trajectories = initial
        .par_iter()
        .enumerate()
        .map(|(k, x0)| simulate_with_id(spec, x0, horizon, dt, k as u64))
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::new(trajectories)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemDocument {
    Linear { a: Vec<Vec<f64>> },
    Polynomial1d { coeffs: Vec<f64> },
    VanDerPol { mu: f64 },
}

impl TryFrom<SystemDocument> for SystemSpec {
    type Error = Error;

    fn try_from(doc: SystemDocument) -> Result<Self> {
        match doc {
            SystemDocument::Linear { a } => Self::linear(&a),
            SystemDocument::Polynomial1d { coeffs } => Self::polynomial(coeffs),
            SystemDocument::VanDerPol { mu } => {
                let s = Self::VanDerPol(mu);
                s.check()?;
                Ok(s)
            }
        }
    }
}
