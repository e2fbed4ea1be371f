//! Kernel families and domain/range space pairs.
//!
//! `ExpDot` is the exponential dot product kernel `K(x, y) = exp(μ xᵀy)`
//! whose native space is the Fock-type space `F²_μ` (1-D weights `m!/μ^m`).
//! Note the parameter multiplies the dot product; some texts write
//! `exp(xᵀy/μ)` instead, which reverses the embedding direction below.
//! `ExpDot` needs `μ·xᵀy ≲ 700` to stay finite in double precision.
//!
//! `GaussRbf` is `K(x, y) = exp(-‖x - y‖²/μ)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    ExpDot,
    GaussRbf,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExpDot => "exp_dot",
            Self::GaussRbf => "gauss_rbf",
        })
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_dot" | "expdot" | "exp-dot" => Ok(Self::ExpDot),
            "gauss_rbf" | "gaussrbf" | "gauss-rbf" | "rbf" => Ok(Self::GaussRbf),
            other => Err(Error::InvalidParameter(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// A kernel family with its parameter `μ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpace {
    family: KernelFamily,
    mu: f64,
}

impl KernelSpace {
    pub fn new(family: KernelFamily, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel parameter must be positive, got {mu}")));
        }
        Ok(Self { family, mu })
    }

    pub fn exp_dot(mu: f64) -> Result<Self> {
        Self::new(KernelFamily::ExpDot, mu)
    }

    pub fn gauss_rbf(mu: f64) -> Result<Self> {
        Self::new(KernelFamily::GaussRbf, mu)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `K(x, y)`, checking dimensions.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `K(x, y)` for slices already known to have equal length.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.family {
            KernelFamily::ExpDot => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (self.mu * dot).exp()
            }
            KernelFamily::GaussRbf => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / self.mu).exp()
            }
        }
    }
}

/// Domain space `H` (parameter `μ₁`) and range space `H̃` (parameter `μ₂`)
/// of the Liouville operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacePair {
    domain: KernelSpace,
    range: KernelSpace,
}

impl SpacePair {
    pub fn new(domain: KernelSpace, range: KernelSpace) -> Result<Self> {
        if domain.family != range.family {
            return Err(Error::InvalidParameter(format!(
                "domain and range kernels must share a family ({} vs {})",
                domain.family, range.family
            )));
        }
        Ok(Self { domain, range })
    }

    pub fn exp_dot(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(KernelSpace::exp_dot(mu1)?, KernelSpace::exp_dot(mu2)?)
    }

    pub fn gauss_rbf(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(KernelSpace::gauss_rbf(mu1)?, KernelSpace::gauss_rbf(mu2)?)
    }

    pub fn domain(&self) -> &KernelSpace {
        &self.domain
    }

    pub fn range(&self) -> &KernelSpace {
        &self.range
    }

    pub fn family(&self) -> KernelFamily {
        self.domain.family
    }

    /// `μ₁/μ₂`.
    pub fn scale_ratio(&self) -> f64 {
        self.domain.mu / self.range.mu
    }

    /// True when the pair supports the eigenfunction method: exponential dot
    /// product kernels with `μ₁ < μ₂`, so that `F²_{μ₁} ⊂ F²_{μ₂}`.
    pub fn check_embedding(&self) -> bool {
        self.family() == KernelFamily::ExpDot && self.domain.mu < self.range.mu
    }

    pub(crate) fn require_exp_dot(&self, what: &str) -> Result<()> {
        match self.family() {
            KernelFamily::ExpDot => Ok(()),
            KernelFamily::GaussRbf => Err(Error::Unsupported(format!(
                "{what} requires the exponential dot product kernel"
            ))),
        }
    }
}

/// Scales trajectory states by `μ₁/μ₂`, so that the domain occupation kernel
/// of `γ` equals the range occupation kernel of the rescaled trajectory:
/// `exp(μ₁ xᵀγ) = exp(μ₂ xᵀ(μ₁/μ₂)γ)`.
pub fn rescale_center(pair: &SpacePair, traj: &Trajectory) -> Result<Trajectory> {
    pair.require_exp_dot("center rescaling")?;
    let ratio = pair.scale_ratio();
    let mut states = traj.states().to_owned();
    for s in 0..states.ncols() {
        for i in 0..states.nrows() {
            states[(i, s)] *= ratio;
        }
    }
    traj.with_states(states)
}
