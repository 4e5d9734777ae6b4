//! The infinite-dimensional Heisenberg group `ℓ² × ℓ² × ℝ` with left-invariant
//! weak Riemannian and sub-Riemannian metrics.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`seqvec`] | finitely-supported sequences, the diagonal weight operator and its inner product `η` |
//! | [`group`] | group law, cocycle, Lie bracket, left translation, horizontality |
//! | [`metric`] | the metrics `σ` and `g`, pointwise norms, Gauss–Legendre curve length |
//! | [`curves`] | piecewise curves, the explicit short horizontal loops, gluing |
//! | [`geodesic`] | certified lower bounds and optimised upper bounds for `d` and `ρ` |
//! | [`curvature`] | bracket adjoints, Arnold's curvature formula, divergence probing, a finite-difference Levi-Civita oracle |
//!
//! Genuinely infinite vectors never appear: every [`SeqVec`] has finite
//! support, and infinite series are handled by [`curvature::CoefficientRule`].
//!
//! ```
//! use heisenberg::{curvature, LieVector, WeightRule};
//!
//! let w = WeightRule::default();
//! let j = 5;
//! let k = curvature::arnold_curvature(&w, &LieVector::a1(j), &LieVector::a2(j)).unwrap();
//! assert!((k.k + 75.0).abs() < 1e-9);
//! ```

// `!(x > tol)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod curves;
pub mod error;
pub mod geodesic;
pub mod group;
pub mod metric;
pub mod quadrature;
pub mod seqvec;
#[cfg(test)]
mod testutil;

pub use curves::Curve;
pub use error::{Error, Result};
pub use group::{GroupPoint, LieVector, TangentVector};
pub use metric::{MetricKind, MetricSpec};
pub use quadrature::QuadratureSpec;
pub use seqvec::{SeqVec, WeightRule};
