//! # otgeo
//!
//! Geometry-aware optimal transport toolkit: estimate the Wasserstein
//! discretization (sampling) error of a measure without an OT solver, derive
//! a fast intrinsic-dimension estimator from its multi-scale decay, and use
//! that dimension to calibrate Richardson-extrapolated Sinkhorn-divergence
//! estimators of the squared 2-Wasserstein distance.
//!
//! ## Pipeline
//!
//! 1. [`discretization::estimate_discretization_error`] — Monte Carlo estimate
//!    of `OT_c(rho, rho_n*)`, the transport cost between a measure and its best
//!    weighted approximation on a fixed `n`-point support. No solver: the
//!    semi-dual collapses to a nearest-neighbor integral.
//! 2. [`dimension::estimate_dimension`] — the two-scale exponent of that error
//!    (`n` vs `ceil(eta * n)` supports) recovers the intrinsic dimension.
//! 3. [`debias`] — plug the estimated dimension into the diagonal Richardson
//!    schedule `eps(n) = eps0 * n^(-1/(d+4))` to cancel the leading entropic
//!    and statistical biases of the Sinkhorn divergence simultaneously.
//!
//! All randomness flows through [`seed::SeedSpec`]; identical seeds reproduce
//! identical results bit-for-bit, independent of the rayon thread count.

pub mod bench;
pub mod debias;
pub mod dimension;
pub mod discretization;
pub mod entropic;
mod error;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod nearest;
pub mod numeric;
pub mod plot;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use measure::{cost, CostSpec, DiscreteMeasure, EstimateReport, PointCloud};
pub use seed::{SeedPair, SeedSpec};
