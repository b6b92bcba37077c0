//! Numerical toolkit for multilinear strong maximal operators, fractional
//! integrals, and rectangle-based weight constants on discrete dyadic grids.
//!
//! Everything operates on piecewise-constant functions over uniform grids on
//! an axis-parallel unit box ([`grid::GridFunction`]). On top of that sit:
//!
//! * [`maximal`] — strong (rectangle) and cube maximal operators, dyadic and
//!   full families, truncated and shift-averaged variants, weak-norm
//!   estimates;
//! * [`weights`] — rectangle Muckenhoupt-type constants for one or several
//!   weights, reverse-doubling diagnostics, derived auxiliary exponents, and
//!   weight generators;
//! * [`carleson`] — an elementary convexity-gap inequality on 2^n-tuples,
//!   dyadic embedding sums, and Carleson-sequence checks;
//! * [`fracint`] — multilinear fractional integrals by midpoint quadrature,
//!   good-lambda comparisons against the cube maximal operator, and a
//!   vanishing-dyadic-maximal experiment on a signed box;
//! * [`harness`] — scenario-driven verification runs with deterministic,
//!   reproducible reports (also exposed through the `msmax` binary).
//!
//! All randomness is seeded explicitly and all parallel reductions collect in
//! deterministic order, so a scenario run with a fixed seed produces
//! byte-identical reports (modulo timing footers).

// Guards written as `!(x >= c)` deliberately reject NaN together with the
// out-of-range values; the `partial_cmp` rewrite clippy suggests hides that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleson;
pub mod error;
pub mod fracint;
pub mod grid;
pub mod harness;
pub mod maximal;
pub mod weights;

pub use error::{Error, Result};
