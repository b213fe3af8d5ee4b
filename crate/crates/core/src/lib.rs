//! Alternately-optimized subspace neural networks (AO-SNN) for 2-D exterior
//! Helmholtz scattering by a circular obstacle, truncated with a
//! Dirichlet-to-Neumann transparent boundary condition.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dtn;
pub mod error;
pub mod experiment;
pub mod geometry;
mod linalg;
pub mod loss;
pub mod lsq;
pub mod net;
pub mod oracle;
pub mod reference;
pub mod solver;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
