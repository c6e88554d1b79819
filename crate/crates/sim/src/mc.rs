//! Parallel Monte Carlo driver.
//!
//! Draws are independent streams keyed by `(seed, index)`; they are produced
//! in parallel, collected in index order and reduced serially, so the result
//! is bit-identical to [`rdars_core::mc_oracle::estimate_sinr_terms`] for any
//! thread count.

use rayon::prelude::*;
use rdars_core::channel::PhaseShifts;
use rdars_core::mc_oracle::{summarize, McContext, McEstimate};
use rdars_core::scenario::{StatisticalCsi, SystemConfig};

pub fn estimate_sinr_terms_par(
    cfg: &SystemConfig,
    csi: &StatisticalCsi,
    theta: &PhaseShifts,
    p: &[f64],
    draws: usize,
    seed: u64,
) -> rdars_core::Result<McEstimate> {
    let ctx = McContext::new(cfg, csi, theta)?;
    let samples = (0..draws as u64).into_par_iter().map(|d| ctx.draw(seed, d)).collect::<rdars_core::Result<Vec<_>>>()?;
    summarize(&samples, p)
}
