//! Toolkit for O-metric spaces: metric-like structures `(X, d, a)` where the
//! triangle inequality is mediated by a binary operation `o`, so that
//! `d(x, z) <= o(d(x, y), d(y, z))` and `d(x, y) = a` exactly when `x = y`.
//!
//! The crate covers:
//! - [`scalarfn`]: a small expression language for scalar and binary
//!   functions, a catalog of common transforms with analytic inverses,
//!   numeric inversion, and sampled monotonicity checks;
//! - [`space`]: the space model, builtin examples, axiom checking and
//!   direction classification;
//! - [`transforms`]: pushforward along monotone maps, power rescaling,
//!   collapse to an ordinary metric, downward duals, and finite products;
//! - [`topology`]: balls, convergence diagnostics, uniqueness and
//!   open-ball criteria, Hausdorff-style separation witnesses;
//! - [`fixpoint`]: polygon-bound families and a contraction fixed-point
//!   solver with hypothesis auditing;
//! - [`sharp`]: sharpened chain bounds versus naive triangle sums;
//! - [`matrixaudit`]: finite distance-matrix audits, spiral test matrices,
//!   and relaxation-constant growth tables.

// Guards written as `!(x >= k)` intentionally reject NaN, which the
// suggested `x < k` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fixpoint;
pub mod interval;
pub mod matrixaudit;
pub mod rng;
pub mod scalarfn;
pub mod sharp;
pub mod space;
pub mod topology;
pub mod transforms;

pub use error::{Error, Result};
pub use interval::Interval;
pub use space::{Direction, OMetricSpace, Point};

/// Default tolerance for equality-with-`a` comparisons.
pub const TOL_EQ: f64 = 1e-9;
/// Default slack when checking inequalities on sampled values.
pub const TOL_INEQ: f64 = 1e-9;
/// Default residual tolerance for numeric inversion.
pub const TOL_INV: f64 = 1e-12;
/// Default residual tolerance for fixed-point iteration.
pub const TOL_FIX: f64 = 1e-8;
/// Default relative tolerance for betweenness detection in matrix audits.
pub const TOL_BET: f64 = 1e-9;

/// `a == b` up to `tol`, scaled by magnitude once values exceed 1.
///
/// Absolute comparison near the unit scale, relative above it: exponential
/// distances reach 1e8 and beyond, where an absolute 1e-9 is finer than
/// one ulp.
#[inline]
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// `lhs <= rhs` up to `tol`, with the same magnitude scaling as [`approx_eq`].
#[inline]
pub fn leq_with_tol(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * lhs.abs().max(rhs.abs()).max(1.0)
}
