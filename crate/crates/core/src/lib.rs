//! Fundamental solutions of `∂_t u − Δ(u^m) + h(t) g(u) = 0` with point-mass data,
//! their `k → ∞` limits, and the tools used to tell complete from single-point
//! initial blow-up.
// NaN-rejecting comparisons like `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod energetics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod profiles;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
