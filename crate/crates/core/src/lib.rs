//! Numerical machinery for the one-dimensional period doubling
//! Schrödinger operator H = Δ + V, with V read along the fixed point of
//! the substitution a ↦ ab, b ↦ aa.
//!
//! The crate turns the standard analysis pipeline for this operator into
//! runnable, audited numerics:
//!
//! - [`substitution`]: block words, the two-sided fixed point, shifts,
//!   aligned partitions, and the prefix block decomposition with its
//!   string certificate.
//! - [`transfer`]: SL(2, ℝ) transfer matrices in an overflow-proof scaled
//!   representation, the block recursion Mₙ₊₁ = Mₙ₋₁²Mₙ, prefix products
//!   in O(log m) factors, and trace orbits.
//! - [`spectrum`]: trace-bounded band detection with bisection-refined
//!   edges, band measures, and the empirical trace bound.
//! - [`bounds`]: the 4×4 propagation matrices, their entry and norm
//!   bounds, and the explicit constants K, J, S, κ, γ₂, D, γ, γ₁, α.
//! - [`growth`]: truncated solution norms, the two-block and three-scale
//!   norm inequalities, power-law exponent fits.
//! - [`transport`]: exact Laplace-averaged position moments via
//!   eigendecomposition and finite-time dynamical exponent proxies.

// Domain guards spelled `!(x > 0.0)` reject NaN along with the out-of-range
// values; matrix kernels index rows and columns explicitly.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod growth;
pub mod linalg;
pub mod spectrum;
pub mod substitution;
pub mod transfer;
pub mod transport;

pub use error::{Error, Result};
