//! Numerical nonlinear potential theory for sublinear equations
//! `-Delta_p u = sigma u^q + mu` and their integral forms `u = P(u^q dsigma) + P mu`.
//!
//! * [`measure`]: atomic, smeared and 1D grid measures, ball masses, node sets and norms.
//! * [`potentials`]: Wolff, truncated Wolff and Riesz potentials, energies.
//! * [`kernels`]: Green kernels and matrices with sampled kernel constants.
//! * [`criteria`]: existence criteria as norms, with an implication audit.
//! * [`solver`]: the monotone iteration and its diagnostics.
//! * [`verify`]: ODE residual and energy identity checks in one dimension.
//! * [`cli`]: the config-driven command line front end.

pub mod cli;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod infser;
pub mod kernels;
pub mod measure;
pub mod potentials;
pub mod quad;
pub mod solver;
pub mod verify;

pub use criteria::{Backend, CriteriaReport, Mode};
pub use error::{Error, Result};
pub use kernels::{Kernel, KernelDiagnostics};
pub use measure::{EvaluationSet, Measure, NodeTag, Params};
pub use solver::{IterationConfig, SeedMode, SolveReport};
