//! Extremes of independent Gaussian processes.
//!
//! The crate builds the limits of pointwise maxima and minima of `n`
//! independent copies of a Gaussian process: the max-stable process M_Γ,
//! the min-process L_Γ and the α-stable field S_{Γ,α}, all driven by a
//! negative-definite kernel Γ. It also simulates the pre-limit maxima and
//! minima with their normalizing sequences, and provides the statistics
//! needed to check convergence.
//!
//! Module map:
//!
//! - [`kernel`]: kernels Γ, grid discretization, negative-definiteness checks.
//! - [`gauss`]: covariance matrices, Cholesky factors, Gaussian path batches.
//! - [`empirical`]: pre-limit maxima/minima and normalizing constants.
//! - [`limitproc`]: Poisson skeletons, M_Γ / L_Γ samplers, fidi evaluators.
//! - [`stable`]: the α-stable series field and stability diagnostics.
//! - [`stats`]: ECDFs, Kolmogorov–Smirnov tests, standard errors.
//! - [`experiment`]: config-driven experiment runner behind the CLI.

pub mod empirical;
pub mod error;
pub mod experiment;
pub mod gauss;
pub mod kernel;
pub mod limitproc;
pub mod normal;
pub mod rng;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{Stream, StreamKey};
