//! Pseudo-spectral solver and estimate-verification harness for the 1D
//! periodic aggregation-diffusion system
//!
//! ```text
//! du/dt = d/dx( -mu(u) H u + u dv/dx ) + r u (1 - u),
//! d2v/dx2 = u - <u>,
//! ```
//!
//! with semilinear nonlocal diffusion `mu(u) H u` (H the periodic Hilbert
//! transform, generalized to fractional order via `Lambda^alpha`), logistic
//! growth, and a vanishing-viscosity regularization `eps d2u/dx2`.
//!
//! The crate provides:
//! - [`spectral`]: periodic grid, transforms, and Fourier-multiplier
//!   operators,
//! - [`model`]: the semilinearity catalog and evaluators for every explicit
//!   constant and admissibility condition of the a-priori estimates,
//! - [`stepper`]: divergence-form right-hand side and an SSP-RK3 integrator
//!   with exact integrating factor for the viscous term,
//! - [`diagnostics`]: functionals, norms, balance laws and pointwise
//!   inequalities, each with independent brute-force oracles,
//! - [`experiments`]: declarative scenarios, verification campaigns,
//!   parameter sweeps, and report emission.

// Validation predicates use the `!(x >= 0.0)` form on purpose: unlike
// `x < 0.0` it also rejects NaN. Index-based loops are kept where several
// coefficient arrays are walked in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use model::{ModelParams, Semilinearity, TheoremConstants};
pub use spectral::{Grid, RealField, Spectrum};
pub use stepper::{Classification, State, StepControl, Trajectory};
