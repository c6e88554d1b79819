//! Statistical-CSI analysis and optimization of an RDARS-aided multi-user
//! massive-MIMO uplink.
//!
//! An RDARS panel has `N` elements; `a` of them are wired to the BS and act
//! as distributed antennas (connected mode), the rest reflect with
//! configurable phases. The BS combines with MRC on LMMSE estimates of the
//! equivalent channel. This crate provides
//!
//! * the scenario, channel and estimator models ([`scenario`], [`channel`],
//!   [`estimation`]),
//! * the closed-form ergodic-rate terms and a Monte Carlo oracle for them
//!   ([`analytic_rate`], [`mc_oracle`]),
//! * reduced RIS, DAS and colocated closed forms ([`reference`]) and seeded
//!   random test cases ([`regression`]),
//! * the fractional-programming BCD optimizer of powers and phases with two
//!   phase solvers ([`fp_bcd`], [`phase_rga`], [`phase_mm`]).
//!
//! The crate is `no_std` (with `alloc`); file formats, the CLI and parallel
//! Monte Carlo live in the companion `rdars-sim` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose to reject NaN; index loops over parallel
// per-user arrays read better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analytic_rate;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod fp_bcd;
pub mod linalg;
pub mod mc_oracle;
pub mod phase_mm;
pub mod phase_rga;
pub mod reference;
pub mod regression;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
