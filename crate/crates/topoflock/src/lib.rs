//! Numerical laboratory for alignment ("flocking") dynamics driven by
//! short-range topological communication kernels.
//!
//! The crate provides three coupled instruments on the periodic domain:
//!
//! * a conservative 1D hydrodynamic solver for the pressureless alignment
//!   system with singular, density-adapted kernels ([`hydro`]),
//! * a discrete agent simulator on T^1 and T^2 with crowd-count
//!   ("topological") distances ([`agents`]),
//! * a diagnostics suite that tracks every theorem-level invariant at desk
//!   scale: conservation laws, energy/enstrophy balance, transported ratios,
//!   maximum principles, spectral gaps, and decay envelopes ([`metrics`],
//!   [`spectral`]).
//!
//! Experiments are described by flat key-value configs and driven by the
//! `topoflock` binary; see the repository README for the schema, the
//! shipped presets, and the acceptance suite.

// Parameter guards use `!(x > 0.0)` on purpose: the negation rejects NaN,
// which the suggested `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod config;
pub mod error;
pub mod fields;
pub mod fourier;
pub mod geometry;
pub mod hydro;
pub mod kernels;
pub mod metrics;
pub mod nonlocal;
pub mod runner;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{AgentError, ConfigError, FieldError, HydroError, KernelError, OpError, SpectralError};
