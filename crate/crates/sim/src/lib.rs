//! Experiment runner for the RDARS uplink library: TOML experiment files,
//! parallel Monte Carlo validation, convergence traces, parameter sweeps
//! over the compared baselines, and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod mc;
pub mod output;

pub use error::{SimError, SimResult};
