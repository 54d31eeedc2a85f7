//! Hybrid pipeline, file formats and command line on top of [`opdyn_core`].
//!
//! [`pipeline::hybrid_run`] evolves a short TEBD prefix, trains the window
//! regressor on it, extrapolates the observable over the rest of the
//! interval and compares against a full reference. [`cli`] exposes this and
//! the plain simulations as the `opdyn` binary.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use opdyn_core as core;

pub use config::{HybridConfig, ModelKind, Observable, Reference, Settings};
pub use error::{Error, Result};
pub use pipeline::{bench_scaling, compare_series, hybrid_run, BenchRow, Comparison, RunReport};
