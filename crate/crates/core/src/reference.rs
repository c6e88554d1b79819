//! Reduced closed forms for the systems the RDARS model contains:
//!
//! * `a = 0`: RIS-aided massive MIMO (all elements reflect),
//! * `a = N`: a two-set distributed antenna system (no reflection),
//! * `N = a = 0`: conventional colocated massive MIMO.
//!
//! Each evaluator is coded directly from the system parameters with the
//! vanishing terms removed, independently of [`crate::analytic_rate`]; they
//! serve as oracles for the general expressions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::RateBreakdown;
use crate::channel::PhaseShifts;
use crate::error::{Error, Result};
use crate::scenario::{StatisticalCsi, SystemConfig};

fn pilot_noise(cfg: &SystemConfig) -> Result<(f64, f64)> {
    let energy = cfg.pilot_len as f64 * cfg.pilot_power;
    if !(energy > 0.0) {
        return Err(Error::InvalidConfig("reduced evaluators need positive pilot energy".into()));
    }
    Ok((cfg.noise_bs / energy, cfg.noise_rdars / energy))
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// RIS-aided system (`a = 0`) at phases `theta`.
pub fn ris_breakdown(cfg: &SystemConfig, csi: &StatisticalCsi, theta: &PhaseShifts) -> Result<RateBreakdown> {
    if cfg.connected != 0 {
        return Err(Error::InvalidConfig(format!("RIS evaluator needs a = 0, got {}", cfg.connected)));
    }
    let (sb, _) = pilot_noise(cfg)?;
    let l = cfg.bs_antennas() as f64;
    let n = cfg.elements() as f64;
    let delta = cfg.rician_rb;
    let k_users = cfg.num_users();

    struct U {
        eps: f64,
        c: f64,
        gamma: f64,
        f: Complex64,
        e1: f64,
        e2: f64,
        e3: f64,
    }
    let users: Vec<U> = cfg
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let eps = u.rician;
            let c = cfg.gain_rb * u.gain_ur / ((delta + 1.0) * (eps + 1.0));
            let gamma = u.gain_ub;
            let a1 = n * c * delta;
            let a2 = n * c * (eps + 1.0) + gamma;
            let a3 = a1 * sb / ((a2 + sb) * (a2 + sb + l * a1));
            let a4 = a2 / (a2 + sb);
            let f = (0..cfg.elements()).map(|m| csi.rdars_los[m].conj() * theta.get(m) * csi.user_los[k][m]).sum();
            U { eps, c, gamma, f, e1: a3 + a4, e2: l * a3 + a4, e3: l * a3 * a3 + 2.0 * a3 * a4 + a4 * a4 }
        })
        .collect();

    let mut signal = Vec::with_capacity(k_users);
    let mut noise = Vec::with_capacity(k_users);
    let mut leak = Vec::with_capacity(k_users);
    for u in &users {
        let (c, eps, gamma, e1, e2, e3) = (u.c, u.eps, u.gamma, u.e1, u.e2, u.e3);
        let f2 = u.f.norm_sqr();
        let s = l * (f2 * c * delta * eps + n * c * delta * e2 + (n * c * (eps + 1.0) + gamma) * e1);
        signal.push(s * s);
        noise.push(cfg.noise_bs * s);
        leak.push(
            l * f2 * c * c * delta * eps * (n * (l * delta + eps + 1.0) * (e2 * e2 + 1.0) + 2.0 * (l * e1 + e2) * (e2 + 1.0))
                + l * f2 * c * delta * eps * (gamma + (gamma + sb) * e2 * e2)
                + l * l * n * n * c * c * delta * delta * e2 * e2
                + 2.0 * l * n * n * c * c * delta * (eps + 1.0) * e2 * e2
                + l * n * n * c * c * (eps + 1.0) * (eps + 1.0) * e3
                + l * l * n * c * c * ((2.0 * eps + 1.0) * e1 * e1 + 2.0 * delta * e1 * e2)
                + l * n
                    * c
                    * (c * (2.0 * delta * e2 * e2 + (2.0 * eps + 1.0) * e3) + (2.0 * gamma + sb) * (delta * e2 * e2 + (eps + 1.0) * e3))
                + l * gamma * (gamma + sb) * e3,
        );
    }
    let mut interference = vec![vec![0.0; k_users]; k_users];
    for (k, uk) in users.iter().enumerate() {
        for (i, ui) in users.iter().enumerate() {
            if i == k {
                continue;
            }
            let (ck, ek, gk) = (uk.c, uk.eps, uk.gamma);
            let (ci, ei, gi) = (ui.c, ui.eps, ui.gamma);
            let (e1, e2, e3) = (uk.e1, uk.e2, uk.e3);
            let (fk2, fi2) = (uk.f.norm_sqr(), ui.f.norm_sqr());
            let h_ki = inner(csi.user_los[k].as_slice(), csi.user_los[i].as_slice());
            let cross = (uk.f.conj() * ui.f * h_ki.conj()).re;
            interference[k][i] = l * l * fk2 * fi2 * ck * ci * delta * delta * ek * ei
                + l * fk2 * ck * delta * ek * (ci * (l * n * delta + n * ei + n + 2.0 * l * e1) + gi)
                + l * fi2 * ci * delta * ei * (ck * e2 * (l * n * delta * e2 + n * ek * e2 + n * e2 + 2.0 * l * e1) + (gk + sb) * e2 * e2)
                + l * l * n * n * ck * ci * delta * delta * e2 * e2
                + l * n * n * ck * ci * (delta * (ek + ei + 2.0) * e2 * e2 + (ek + 1.0) * (ei + 1.0) * e3)
                + l * l * n * ck * ci * e1 * ((ek + ei + 1.0) * e1 + 2.0 * delta * e2)
                + l * l * ck * ci * ek * ei * e1 * (h_ki.norm_sqr() * e1 + 2.0 * delta * cross)
                + l * gi * (gk + sb) * e3
                + l * n * ((gk + sb) * ci * (delta * e2 * e2 + (ei + 1.0) * e3) + gi * ck * (delta * e2 * e2 + (ek + 1.0) * e3));
        }
    }
    Ok(RateBreakdown { signal, leak, noise, interference })
}

/// Distributed antenna system (`a = N`): `L` antennas at the BS plus `N`
/// remote antennas at the panel.
pub fn das_breakdown(cfg: &SystemConfig, csi: &StatisticalCsi) -> Result<RateBreakdown> {
    if cfg.connected != cfg.elements() {
        return Err(Error::InvalidConfig(format!("DAS evaluator needs a = N, got a = {}, N = {}", cfg.connected, cfg.elements())));
    }
    let (sb, sr) = pilot_noise(cfg)?;
    let l = cfg.bs_antennas() as f64;
    let a = cfg.elements() as f64;
    let k_users = cfg.num_users();
    // (ε, d, γ, e_BS, e_remote)
    let users: Vec<(f64, f64, f64, f64, f64)> = cfg
        .users
        .iter()
        .map(|u| {
            let d = u.gain_ur / (u.rician + 1.0);
            (u.rician, d, u.gain_ub, u.gain_ub / (u.gain_ub + sb), d / (d + sr))
        })
        .collect();
    let mut signal = Vec::with_capacity(k_users);
    let mut noise = Vec::with_capacity(k_users);
    let mut leak = Vec::with_capacity(k_users);
    for &(eps, d, gamma, eb, er) in &users {
        let s = l * gamma * eb + a * d * (eps + er);
        signal.push(s * s);
        noise.push(cfg.noise_bs * l * gamma * eb + cfg.noise_rdars * a * d * (eps + er));
        leak.push(l * gamma * (gamma + sb) * eb * eb + a * d * d * (eps + eps * er * er + er * er) + a * d * sr * er * er * (eps + 1.0));
    }
    let mut interference = vec![vec![0.0; k_users]; k_users];
    for (k, &(ek, dk, gk, eb, er)) in users.iter().enumerate() {
        for (i, &(ei, di, gi, _, _)) in users.iter().enumerate() {
            if i == k {
                continue;
            }
            let g_ki = inner(csi.user_los[k].as_slice(), csi.user_los[i].as_slice());
            interference[k][i] =
                l * gi * (gk + sb) * eb * eb + dk * di * ek * ei * g_ki.norm_sqr() + a * di * (dk * ek + (ei + 1.0) * (dk + sr) * er * er);
        }
    }
    Ok(RateBreakdown { signal, leak, noise, interference })
}

/// Colocated massive MIMO (`N = a = 0`).
pub fn colocated_breakdown(cfg: &SystemConfig) -> Result<RateBreakdown> {
    if cfg.elements() != 0 {
        return Err(Error::InvalidConfig(format!("colocated evaluator needs N = 0, got {}", cfg.elements())));
    }
    let (sb, _) = pilot_noise(cfg)?;
    let l = cfg.bs_antennas() as f64;
    let gamma: Vec<f64> = cfg.users.iter().map(|u| u.gain_ub).collect();
    let e: Vec<f64> = gamma.iter().map(|g| g / (g + sb)).collect();
    let k_users = gamma.len();
    let interference = (0..k_users)
        .map(|k| (0..k_users).map(|i| if i == k { 0.0 } else { l * gamma[i] * (gamma[k] + sb) * e[k] * e[k] }).collect())
        .collect();
    Ok(RateBreakdown {
        signal: (0..k_users).map(|k| (l * gamma[k] * e[k]).powi(2)).collect(),
        leak: (0..k_users).map(|k| l * gamma[k] * (gamma[k] + sb) * e[k] * e[k]).collect(),
        noise: (0..k_users).map(|k| cfg.noise_bs * l * gamma[k] * e[k]).collect(),
        interference,
    })
}

/// Textbook colocated SINR with LMMSE estimates and MRC,
/// `p_k L γ_k e_k / (Σ_i p_i γ_i + σ²)` with `e_k = γ_k / (γ_k + σ²/(τ p_p))`.
pub fn colocated_sinr(cfg: &SystemConfig, p: &[f64]) -> Result<Vec<f64>> {
    let (sb, _) = pilot_noise(cfg)?;
    let l = cfg.bs_antennas() as f64;
    let total: f64 = cfg.users.iter().zip(p).map(|(u, p)| p * u.gain_ub).sum();
    Ok(cfg.users.iter().zip(p).map(|(u, pk)| pk * l * u.gain_ub * (u.gain_ub / (u.gain_ub + sb)) / (total + cfg.noise_bs)).collect())
}
