//! Stochastic binary recurrent networks trained by recurrent infomax and
//! scored as reservoirs on memory and Boolean-function tasks.
//!
//! * [`reservoir`]: network dynamics with homeostatic biases.
//! * [`infomax`]: Gaussian mutual information of successive states and its
//!   gradient-ascent weight update.
//! * [`benchmarks`]: linear readouts, memory capacity, Boolean capacity.
//! * [`analysis`]: strongest connections, weight statistics, per-neuron
//!   information about the last input.
//! * [`runner`]: multi-trial experiments with checkpoints and reports.

pub mod analysis;
pub mod benchmarks;
pub mod error;
pub mod infomax;
pub mod reservoir;
pub mod rng;
pub mod runner;
pub mod snapshot;

pub use error::{Error, Result};
