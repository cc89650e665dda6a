//! Spectral Galerkin / drift-implicit Euler approximation of
//!
//! `dX = (A X + F(X)) dt + dW` on `[0, L]` with Dirichlet boundary
//! conditions, cubic drift and additive Q-Wiener noise, together with a
//! Monte Carlo harness for weak/strong error curves and long-time averages.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod spectral;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Result, SpdeError};
