//! Bayesian simultaneous autoregressive (SAR) spatial models.
//!
//! The model is `y = rho*W*y + X*beta + eps` with `eps ~ N(0, sigma^2 I)`,
//! where `W` is a row-stochastic spatial weight matrix. The crate covers the
//! full workflow: building weight matrices from edge lists, simulating
//! outcomes, fitting the model by adaptive random-walk Metropolis, comparing
//! fitted models with WAIC and importance-sampling cross-validation, and
//! scoring observations for influence with Bregman-type case diagnostics.

pub mod compare;
pub mod divergence;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod sampler;
pub mod stats;
pub mod svg;

mod linalg;

pub mod cli;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
