//! Exact and Monte Carlo laboratory for the singularity of sparse Bernoulli and
//! combinatorial random matrices.
//!
//! The crate is organised bottom-up: [`model`] holds the shared types and the
//! randomness contract, [`sampling`] and [`linalg`] provide the primitives, and
//! [`anticoncentration`], [`structured`], [`smoothing`] and [`rounding`] build the
//! probabilistic machinery on top. [`campaign`] runs reproducible experiments and
//! writes reports; the `rmlab` binary is a thin CLI over it.

pub mod anticoncentration;
pub mod campaign;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rounding;
pub mod sampling;
pub mod smoothing;
pub mod structured;

pub use error::{Error, Result};
