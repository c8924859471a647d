//! Simulation laboratory for a single-server queue running the
//! shortest-remaining-processing-time (SRPT) policy.
//!
//! The crate provides, in dependency order:
//!
//! * [`measure`] — finite point measures on the half line, the state space of
//!   the queue descriptor and of the load process;
//! * [`dist`] — service and interarrival distribution families with analytic
//!   moments, truncated moments, and the supremum of the support;
//! * [`primitives`] — reproducible arrival/service streams and the realized
//!   load process;
//! * [`ht`] — construction of heavy-traffic model ladders (traffic intensity
//!   `1 - gamma/r`) and their assumption report;
//! * [`engine`] — event-exact simulation of SRPT and comparison policies,
//!   producing measure-valued snapshots and per-job departure times;
//! * [`scaling`] — diffusion scaling (time by `r^2`, mass by `1/r`) of state
//!   and load paths, and the analytic tail-load variance;
//! * [`rbm`] — reflected Brownian motion reference paths and the closed-form
//!   transient marginal CDF of the workload limit;
//! * [`diagnostics`] — statistical checks: queue-length vs workload deviation,
//!   concentration profiles, Kolmogorov-Smirnov comparisons, FCLT variance
//!   tables, and trend verdicts across a ladder;
//! * [`experiment`] — config-driven experiment driver emitting CSV/JSON/SVG
//!   artifacts with byte-identical reruns for a fixed seed.
//!
//! The `examples/` directory holds one runnable example per capability; the
//! `srptlab` binary exposes `run`, `validate`, and `demo` subcommands over
//! [`experiment`].

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

pub mod diagnostics;
pub mod dist;
pub mod engine;
pub mod experiment;
pub mod ht;
pub mod measure;
pub mod plot;
pub mod primitives;
pub mod rbm;
pub mod scaling;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-domain argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An experiment configuration failed validation.
    #[error("config error: {0}")]
    Config(String),
    /// A runtime invariant of the simulation was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),
    /// A scaling grid does not match the sampled trajectory or horizon.
    #[error("grid error: {0}")]
    Grid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
