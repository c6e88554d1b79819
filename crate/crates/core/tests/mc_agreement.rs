//! Closed-form terms against the serial Monte Carlo oracle on a few small
//! cases. The full 20-config, 1e5-draw check runs in the sim acceptance
//! target; here a looser 4σ bound keeps the suite fast and robust.

#![allow(clippy::needless_range_loop)]

mod common;

use rdars_core::analytic_rate::{rate_breakdown, sinr_all};
use rdars_core::mc_oracle::{estimate_sinr_terms, TermEstimate};

const DRAWS: usize = 20_000;

fn check(name: &str, seed: u64, t: &TermEstimate, analytic: f64) {
    let z = t.z_score(analytic);
    assert!(z.abs() < 4.0, "seed {seed} {name}: analytic {analytic:e}, mc {:e} ± {:e} (z = {z:.2})", t.mean, t.std_error);
}

#[test]
fn closed_form_matches_monte_carlo() {
    for seed in [3u64, 11, 17] {
        let c = common::random_case(seed);
        let bd = rate_breakdown(&c.csi, &c.theta).unwrap();
        let mc = estimate_sinr_terms(&c.cfg, &c.csi, &c.theta, &c.p, DRAWS, seed).unwrap();
        let sinr = sinr_all(&c.p, &bd).unwrap();
        for k in 0..c.cfg.num_users() {
            check("signal", seed, &mc.signal[k], bd.signal[k]);
            check("leak", seed, &mc.leak[k], bd.leak[k]);
            check("noise", seed, &mc.noise[k], bd.noise[k]);
            check("sinr", seed, &mc.sinr[k], sinr[k]);
            for (i, t) in mc.interference[k].iter().enumerate() {
                if let Some(t) = t {
                    check("interference", seed, t, bd.interference[k][i]);
                }
            }
        }
    }
}

#[test]
fn zero_powers_give_zero_sinr_both_ways() {
    let c = common::random_case(8);
    let p = vec![0.0; c.cfg.num_users()];
    let bd = rate_breakdown(&c.csi, &c.theta).unwrap();
    assert!(sinr_all(&p, &bd).unwrap().iter().all(|s| *s == 0.0));
    let mc = estimate_sinr_terms(&c.cfg, &c.csi, &c.theta, &p, 200, 8).unwrap();
    assert!(mc.sinr.iter().all(|s| s.mean == 0.0 && s.std_error == 0.0));
}
