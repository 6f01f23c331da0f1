//! Tall peaks of Gaussian random fields and of linear stochastic heat and wave
//! equations driven by colored noise.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and weights are tabulated to full published precision.
#![allow(clippy::excessive_precision)]

pub mod bounds;
pub mod covariance;
pub mod dimension;
pub mod error;
pub mod fieldgen;
pub mod geometry;
pub mod harness;
pub mod interp;
pub mod peaks;
pub mod quadrature;
pub mod radial;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
