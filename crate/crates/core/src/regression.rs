//! Random small scenarios for regression and oracle checks.
//!
//! Dimensions follow the regression ranges (`L, N ∈ 4..=16`, `a ∈ 0..=N`,
//! `K ∈ 1..=4`); all gains and noise powers are O(1) so that every term is
//! well scaled. A case is a pure function of its seed.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::channel::PhaseShifts;
use crate::error::Result;
use crate::rng::{self, StreamRng};
use crate::scenario::{
    build_indicator, derive_statistics, Angles, ArrayShape, Geometry, IndicatorMatrix, IndicatorPolicy, StatisticalCsi, SystemConfig,
    UserLink,
};

/// Stream ids reserved for case generation.
pub const PARAMETER_STREAM: u64 = 1 << 40;
pub const DIMENSION_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub cfg: SystemConfig,
    pub geo: Geometry,
    pub ind: IndicatorMatrix,
    pub csi: StatisticalCsi,
    /// Random unit-modulus phases.
    pub theta: PhaseShifts,
    /// Random powers in `[0.1, 1]`.
    pub p: Vec<f64>,
}

pub fn uniform_in(r: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng::uniform(r)
}

/// Uniform integer in `lo..=hi`.
pub fn int_in(r: &mut StreamRng, lo: usize, hi: usize) -> usize {
    (lo + ((hi - lo + 1) as f64 * rng::uniform(r)) as usize).min(hi)
}

fn angles(r: &mut StreamRng) -> Angles {
    Angles::new(uniform_in(r, 0.0, TAU), uniform_in(r, 0.0, TAU))
}

/// Case with the given dimensions and random parameters.
pub fn case_with(seed: u64, l: usize, n: usize, a: usize, k: usize) -> Result<Case> {
    let mut r = rng::stream(seed, PARAMETER_STREAM);
    let users: Vec<UserLink> = (0..k)
        .map(|_| UserLink {
            rician: uniform_in(&mut r, 0.0, 3.0),
            gain_ur: uniform_in(&mut r, 0.2, 2.0),
            gain_ub: uniform_in(&mut r, 0.05, 1.0),
            weight: 1.0 / k as f64,
        })
        .collect();
    let tau = k + int_in(&mut r, 0, 2);
    let cfg = SystemConfig {
        bs_array: ArrayShape::near_square(l),
        rdars_array: ArrayShape::near_square(n),
        connected: a,
        rician_rb: uniform_in(&mut r, 0.0, 8.0),
        gain_rb: uniform_in(&mut r, 0.2, 2.0),
        users,
        noise_bs: uniform_in(&mut r, 0.1, 2.0),
        noise_rdars: uniform_in(&mut r, 0.1, 2.0),
        p_max: 1.0,
        pilot_power: uniform_in(&mut r, 0.05, 1.0),
        pilot_len: tau,
        coherence_len: 10 * tau,
        element_spacing: 0.5,
        wavelength: 1.0,
    };
    cfg.validate()?;
    let geo = Geometry {
        bs_position: [0.0, 0.0, 10.0],
        rdars_position: [0.0, 0.0, 20.0],
        user_center: [100.0, -20.0, 1.5],
        user_radius: 10.0,
        user_positions: alloc::vec![[100.0, -20.0, 1.5]; k],
        bs_arrival: angles(&mut r),
        rdars_departure: angles(&mut r),
        user_arrivals: (0..k).map(|_| angles(&mut r)).collect(),
    };
    let ind = build_indicator(n, a, IndicatorPolicy::TopA)?;
    let csi = derive_statistics(&cfg, &geo, &ind)?;
    let phases: Vec<f64> = (0..n).map(|_| uniform_in(&mut r, 0.0, TAU)).collect();
    let theta = PhaseShifts::from_angles(&phases, &ind)?;
    let p = (0..k).map(|_| uniform_in(&mut r, 0.1, 1.0)).collect();
    Ok(Case { cfg, geo, ind, csi, theta, p })
}

/// Case with random dimensions in the regression ranges.
pub fn random_case(seed: u64) -> Result<Case> {
    let mut r = rng::stream(seed, DIMENSION_STREAM);
    let l = int_in(&mut r, 4, 16);
    let n = int_in(&mut r, 4, 16);
    let a = int_in(&mut r, 0, n);
    let k = int_in(&mut r, 1, 4);
    case_with(seed, l, n, a, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_in_range_and_deterministic() {
        for seed in 0..40 {
            let c = random_case(seed).unwrap();
            let (l, n, a, k) = (c.cfg.bs_antennas(), c.cfg.elements(), c.cfg.connected, c.cfg.num_users());
            assert!((4..=16).contains(&l) && (4..=16).contains(&n) && a <= n && (1..=4).contains(&k));
            assert_eq!(c, random_case(seed).unwrap());
        }
    }
}
