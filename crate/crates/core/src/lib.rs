//! Spectral and pseudospectral material-stability analysis for wave-amplitude
//! dynamics in quasicrystals with phason self-action.
//!
//! The library builds the evolution matrix of plane-wave amplitude equations
//! for four self-action regimes, measures departure from normality, computes
//! complex and structured epsilon-pseudospectra, and runs parametric sweeps
//! with threshold detection.

// negated comparisons like !(x > 0.0) intentionally reject NaN;
// indexed loops mirror the written block formulas
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod normality;
pub mod pseudospectra;
pub mod report;

pub use error::{Error, Result};
