//! Liouville operator dynamic mode decomposition driven by occupation kernels.
//!
//! Trajectory data `{γ_j : [0, T_j] → ℝⁿ}` generated by an unknown vector
//! field `ẋ = f(x)` is turned into a finite-rank representation of the
//! Liouville operator `A_f g = ∇g · f` acting between two reproducing kernel
//! Hilbert spaces. Two decompositions are provided:
//!
//! - [`singular_dmd`]: an SVD of the finite-rank adjoint, giving singular
//!   values, left/right singular functions, singular Liouville modes, and an
//!   ODE-based trajectory reconstruction.
//! - [`eigen_dmd`]: for nested exponential dot product spaces `H ⊂ H̃`, an
//!   eigendecomposition of the projected operator, Liouville modes, and the
//!   closed-form exponential predictor.
//!
//! [`spectrum_lab`] holds coefficient-space oracles (weighted Hardy and Fock
//! spaces) used to check the data-driven pipelines against the exact
//! operators.
//!
//! ## Kernel convention
//!
//! The exponential dot product kernel is `K(x, y) = exp(μ xᵀy)`. Under this
//! convention `F²_{μ₁} ⊂ F²_{μ₂}` whenever `μ₁ < μ₂`, and an occupation kernel
//! of `H = F²_{μ₁}` is the `H̃ = F²_{μ₂}` occupation kernel of the trajectory
//! scaled by `μ₁/μ₂`.

pub mod datagen;
pub mod eigen_dmd;
mod error;
pub mod gram;
pub mod kernels;
pub mod linalg;
pub mod model_io;
pub mod ode;
pub mod quadrature;
pub mod singular_dmd;
pub mod spectrum_lab;
pub mod trajdata;

pub use error::{Error, Result};

pub use datagen::{sample_trajectory_bundle, simulate, SystemSpec};
pub use eigen_dmd::{EigenDmdModel, EigenOptions, Prediction};
pub use gram::{GramBundle, OrthoBasis};
pub use kernels::{KernelFamily, KernelSpace, SpacePair};
pub use quadrature::{OccupationKernel, QuadratureRule};
pub use singular_dmd::{Reconstruction, SingularDmdModel, SingularOptions};
pub use trajdata::{Trajectory, TrajectorySet};

/// Dense real matrix type used throughout the crate.
pub type Matrix = faer::Mat<f64>;
/// Dense complex matrix type used for eigen decompositions.
pub type CMatrix = faer::Mat<faer::c64>;
pub use faer::c64;
