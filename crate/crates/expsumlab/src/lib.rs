//! Desk-scale numerical laboratory for exponential sums along nondegenerate
//! curves in R^4.
//!
//! The crate evaluates curve sums and their even moments exactly where the
//! arithmetic allows it (multiset class engines, closed-form window factors,
//! periodic grids sized for the expanded power) and by seeded quasirandom
//! estimation elsewhere. Around that core sit the classical diagnostics:
//! major/minor arc classification with Gauss-sum Poisson decompositions,
//! dyadic level-set partitions with pair-counting bounds, windowed local
//! moments of the quadratic Weyl sum, constructive lower-bound blocks, and a
//! family of decoupling-ratio experiments.
//!
//! Modules
//! - [`curve`]: curve families, derivative ladders, nondegeneracy window
//!   constants, affine block rescaling.
//! - [`expsum`]: the sums themselves over intervals, grids, and lattices.
//! - [`arcs`]: rational approximation, Gauss sums, oscillatory integrals,
//!   and the arc-bound verifier.
//! - [`levelset`]: dyadic partitions of phi'' level values, sublevel
//!   measures, and pair-count experiments.
//! - [`moments`]: exact grid moments, bilinear moments, the quasirandom
//!   estimator, and tuple counting.
//! - [`localmoment`]: windowed sixth moments of the quadratic Weyl sum and
//!   the dyadic block-sum inequality.
//! - [`lowerbound`]: constructive moment floors and spectral block
//!   superposition.
//! - [`decoupling`]: parabola, bilinear, surface, and transversality ratio
//!   experiments.
//!
//! Every seeded computation is bitwise deterministic for a fixed seed,
//! independent of thread count: parallel reductions are chunked and combined
//! in a fixed order.

pub mod arcs;
pub mod cli;
pub mod curve;
pub mod decoupling;
pub mod error;
pub mod expsum;
pub mod levelset;
pub mod localmoment;
pub mod lowerbound;
pub mod moments;
pub mod util;

pub use error::{Error, Result};
