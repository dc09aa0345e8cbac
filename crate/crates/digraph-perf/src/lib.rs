//! Closed-form L2/H2 performance metrics for single- and double-integrator
//! consensus networks over directed graphs, with independent Lyapunov and
//! time-domain oracles and the directionality/connectivity experiments.
//!
//! The intended entry points are [`graph`] for building Laplacians,
//! [`spectral::decompose`] for the Jordan data, [`closed_form::performance`]
//! for the metric itself, [`oracle`] for ground-truth cross-checks and
//! [`analysis`] for the comparative experiments. See the `examples/`
//! directory for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod closed_form;
pub mod dd;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
