//! Fluctuations of the zero set of the hyperbolic Gaussian analytic
//! function in the unit ball of C^n, n >= 2.
//!
//! The library computes the variance of the (n-1)-dimensional volume of the
//! zero variety inside pseudo-hyperbolic balls through three mutually
//! validating routes:
//!
//! * [`variance`] — exact adaptive quadrature of a closed-form disk
//!   integral, and an independent nested (s, theta) representation;
//! * [`mc`] — direct simulation of the GAF with a Stokes boundary-integral
//!   fluctuation estimator and bootstrap errors;
//! * [`asymptotics`] — the closed-form limit laws for large intensity and
//!   for radii approaching the boundary, with their constants.
//!
//! Supporting modules: [`specfun`] (log-gamma, zeta, dilogarithm and the
//! gamma identities the constants are built from), [`geometry`] (kernel,
//! ball automorphisms, sphere parametrisation), [`bipotential`] (the
//! two-point potential and its mixed derivative), [`quad`] (adaptive
//! quadrature engines) and [`rng`] (deterministic parallel streams).
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `hypergaf` binary for a scriptable command-line surface.

// domain checks are written as negated comparisons so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bipotential;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod variance;

pub use error::{Error, Result};
pub use geometry::Params;
pub use quad::QuadResult;

/// Library version, embedded in every output record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
