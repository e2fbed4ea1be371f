//! Composite quadrature on trajectory sample grids and the occupation kernel
//! functionals built on it.
//!
//! Quadrature nodes are exactly the trajectory samples. Double integrals use
//! the tensor product of the two 1-D weight vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, KernelSpace, Result, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Composite Simpson; needs an odd number of samples.
    #[default]
    Simpson,
    Trapezoid,
}

impl std::fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Simpson => "simpson",
            Self::Trapezoid => "trapezoid",
        })
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simpson" => Ok(Self::Simpson),
            "trapezoid" | "trapz" => Ok(Self::Trapezoid),
            other => Err(Error::InvalidParameter(format!("unknown quadrature rule {other:?}"))),
        }
    }
}

impl QuadratureRule {
    /// Weight vector for `samples` equally spaced nodes `dt` apart.
    pub fn weights(self, samples: usize, dt: f64) -> Result<Vec<f64>> {
        if samples < 2 {
            return Err(Error::InvalidParameter(format!("quadrature needs S ≥ 2, got {samples}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("quadrature step must be positive, got {dt}")));
        }
        match self {
            Self::Simpson => {
                if samples % 2 == 0 {
                    return Err(Error::SimpsonEvenSamples { samples });
                }
                let h = dt / 3.0;
                Ok((0..samples)
                    .map(|s| {
                        if s == 0 || s == samples - 1 {
                            h
                        } else if s % 2 == 1 {
                            4.0 * h
                        } else {
                            2.0 * h
                        }
                    })
                    .collect())
            }
            Self::Trapezoid => Ok((0..samples)
                .map(|s| if s == 0 || s == samples - 1 { 0.5 * dt } else { dt })
                .collect()),
        }
    }

    /// `Σ_s w_s · samples_s`.
    pub fn integrate_samples(self, samples: &[f64], dt: f64) -> Result<f64> {
        let w = self.weights(samples.len(), dt)?;
        Ok(dot(&w, samples))
    }

    /// Weights for the grid of `traj`.
    pub fn trajectory_weights(self, traj: &Trajectory) -> Result<Vec<f64>> {
        self.weights(traj.len(), traj.dt())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The occupation kernel `Γ_γ` of a trajectory in a kernel space, i.e. the
/// representer of `g ↦ ∫ g(γ(t)) dt`. As a function,
/// `Γ_γ(x) = ∫ K(x, γ(t)) dt`.
#[derive(Debug, Clone)]
pub struct OccupationKernel<'a> {
    space: KernelSpace,
    trajectory: &'a Trajectory,
    rule: QuadratureRule,
    weights: Vec<f64>,
}

impl<'a> OccupationKernel<'a> {
    pub fn new(space: KernelSpace, trajectory: &'a Trajectory, rule: QuadratureRule) -> Result<Self> {
        let weights = rule.trajectory_weights(trajectory)?;
        Ok(Self { space, trajectory, rule, weights })
    }

    pub fn space(&self) -> &KernelSpace {
        &self.space
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.trajectory
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Γ_γ(x) = Σ_s w_s K(x, γ(t_s))`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.trajectory.dim() {
            return Err(Error::DimensionMismatch { expected: self.trajectory.dim(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        occupation_eval_weighted(&self.space, self.trajectory, &self.weights, x)
    }
}

#[inline]
pub(crate) fn occupation_eval_weighted(space: &KernelSpace, traj: &Trajectory, w: &[f64], x: &[f64]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(s, ws)| ws * space.eval_unchecked(x, traj.sample(s)))
        .sum()
}

/// `Γ_γ(x)` for a single evaluation point.
pub fn occupation_eval(space: &KernelSpace, traj: &Trajectory, rule: QuadratureRule, x: &[f64]) -> Result<f64> {
    OccupationKernel::new(*space, traj, rule)?.eval(x)
}

/// `⟨Γ_a, Γ_b⟩ = ∫∫ K(a(t), b(τ)) dτ dt` in the given space.
pub fn occupation_inner(space: &KernelSpace, a: &Trajectory, b: &Trajectory, rule: QuadratureRule) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let wa = rule.trajectory_weights(a)?;
    let wb = rule.trajectory_weights(b)?;
    Ok(occupation_inner_weighted(space, a, &wa, b, &wb))
}

pub(crate) fn occupation_inner_weighted(
    space: &KernelSpace,
    a: &Trajectory,
    wa: &[f64],
    b: &Trajectory,
    wb: &[f64],
) -> f64 {
    wa.iter()
        .enumerate()
        .map(|(s, ws)| ws * occupation_eval_weighted(space, b, wb, a.sample(s)))
        .sum()
}

/// `∫ (γ(t))_i dt`, i.e. `⟨(x)_i, Γ_γ⟩` for coordinate functions in the space.
pub fn coordinate_moment(traj: &Trajectory, coordinate: usize, rule: QuadratureRule) -> Result<f64> {
    if coordinate >= traj.dim() {
        return Err(Error::InvalidParameter(format!(
            "coordinate {coordinate} out of range for dimension {}",
            traj.dim()
        )));
    }
    let w = rule.trajectory_weights(traj)?;
    Ok(w.iter().enumerate().map(|(s, ws)| ws * traj.sample(s)[coordinate]).sum())
}
