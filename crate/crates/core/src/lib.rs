//! Operator dynamics on open spin chains.
//!
//! Short-time expectation values are produced by second-order Trotter TEBD on
//! matrix product states ([`tebd`], [`mps`]); a small linear perceptron trained
//! on sliding windows of that series extends it to long times ([`regressor`]).
//! [`exact`] carries a dense state-vector reference for small chains.
//!
//! The crate is `no_std` and only needs `alloc`. Timing, file formats and the
//! command line live in the `opdyn` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exact;
pub mod hamiltonians;
pub mod mps;
pub mod regressor;
pub mod series;
pub mod tebd;
pub mod tensor_core;

pub use error::{Error, Result};
pub use hamiltonians::{build_bond_terms, BondTermList, Model, ModelSpec};
pub use mps::{LocalOperator, MpsState};
pub use regressor::{Mlp, TrainConfig, TrainReport, WindowSet};
pub use series::TimeSeries;
pub use tebd::{EvolveStats, Truncation, TrotterSchedule};
pub use tensor_core::{ComplexMatrix, SvdResult, C64};
