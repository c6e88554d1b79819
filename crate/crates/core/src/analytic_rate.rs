//! Closed-form SINR building blocks under MRC with LMMSE estimates.
//!
//! Each term is written out exactly as derived for the RDARS uplink: the
//! desired-signal power, the estimation-error noise, the signal leakage and
//! the pairwise interference, plus the LoS couplings they depend on. The only
//! θ dependence is through `f_k = a_N^H B h̄_k`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::channel::PhaseShifts;
use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::scenario::{StatisticalCsi, UserStats};

/// θ-dependent and mode-dependent LoS inner products.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LosCouplings {
    /// `f_k = a_N^H B h̄_k`
    pub f: Vec<Complex64>,
    /// `g_{k,i} = h̄_k^H A^H A h̄_i`
    pub g: Vec<Vec<Complex64>>,
    /// `ζ_n^k = arg(a_N(n)^* h̄_k(n))`, all `n`.
    pub zeta: Vec<Vec<f64>>,
    /// `ς_n^{k,i} = arg(h̄_k(n)^* h̄_i(n))`, all `n`.
    pub varsigma: Vec<Vec<Vec<f64>>>,
}

pub fn los_couplings(csi: &StatisticalCsi, theta: &PhaseShifts) -> Result<LosCouplings> {
    if theta.len() != csi.elements {
        return Err(Error::Dimension(format!("theta has {} entries for N={}", theta.len(), csi.elements)));
    }
    let k_users = csi.num_users();
    let n = csi.elements;
    let zeta: Vec<Vec<f64>> = csi.user_los.iter().map(|h| (0..n).map(|m| (csi.rdars_los[m].conj() * h[m]).arg()).collect()).collect();
    let varsigma: Vec<Vec<Vec<f64>>> = (0..k_users)
        .map(|k| (0..k_users).map(|i| (0..n).map(|m| (csi.user_los[k][m].conj() * csi.user_los[i][m]).arg()).collect()).collect())
        .collect();
    let f = (0..k_users)
        .map(|k| csi.indicator.reflecting().iter().map(|&m| csi.rdars_los[m].conj() * theta.get(m) * csi.user_los[k][m]).sum())
        .collect();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); k_users]; k_users];
    for (k, row) in g.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = if k == i {
                Complex64::new(csi.num_connected() as f64, 0.0)
            } else {
                csi.indicator.connected().iter().map(|&m| csi.user_los[k][m].conj() * csi.user_los[i][m]).sum()
            };
        }
    }
    Ok(LosCouplings { f, g, zeta, varsigma })
}

/// Per-user closed-form terms; `interference[k][i]` is the interference at
/// user `k`'s combiner caused by user `i` (zero on the diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub signal: Vec<f64>,
    pub leak: Vec<f64>,
    pub noise: Vec<f64>,
    pub interference: Vec<Vec<f64>>,
}

impl RateBreakdown {
    pub fn num_users(&self) -> usize {
        self.signal.len()
    }
}

/// `x * e` with the convention `0 * ∞ = 0` for vanishing estimator weights.
#[inline]
fn weighted(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        x * e
    }
}

struct Dims {
    l: f64,
    m: f64,
    a: f64,
    delta: f64,
}

fn dims(csi: &StatisticalCsi) -> Dims {
    Dims { l: csi.bs_antennas as f64, m: csi.num_reflecting() as f64, a: csi.num_connected() as f64, delta: csi.rician_rb }
}

/// Square root of the desired-signal term, `E[q̂_k^H q_k]`.
fn signal_amplitude(d: &Dims, u: &UserStats, f2: f64) -> f64 {
    let Dims { l, m, a, delta } = *d;
    let (c, eps) = (u.c, u.rician);
    l * (f2 * c * delta * eps + m * c * delta * u.e2 + (m * c * (eps + 1.0) + u.gamma) * u.e1) + a * (u.d * eps + u.e4 * u.d)
}

pub fn signal_term(k: usize, csi: &StatisticalCsi, couplings: &LosCouplings) -> f64 {
    let s = signal_amplitude(&dims(csi), &csi.users[k], couplings.f[k].norm_sqr());
    s * s
}

pub fn noise_term(k: usize, csi: &StatisticalCsi, couplings: &LosCouplings) -> f64 {
    let Dims { l, m, a, delta } = dims(csi);
    let u = &csi.users[k];
    let (c, eps) = (u.c, u.rician);
    let f2 = couplings.f[k].norm_sqr();
    csi.noise_bs * l * (f2 * c * delta * eps + m * c * delta * u.e2 + (m * c * (eps + 1.0) + u.gamma) * u.e1)
        + csi.noise_rdars * a * (u.d * eps + u.e4 * u.d)
}

pub fn leak_term(k: usize, csi: &StatisticalCsi, couplings: &LosCouplings) -> f64 {
    let Dims { l, m, a, delta } = dims(csi);
    let u = &csi.users[k];
    let (c, d, eps, gamma) = (u.c, u.d, u.rician, u.gamma);
    let (e1, e2, e3, e4) = (u.e1, u.e2, u.e3, u.e4);
    let (sb, sr) = (u.pilot_noise_bs, u.pilot_noise_rdars);
    let f2 = couplings.f[k].norm_sqr();
    let mut acc = CompensatedSum::new();
    acc.add(l * f2 * c * c * delta * eps * (m * (l * delta + eps + 1.0) * (e2 * e2 + 1.0) + 2.0 * (l * e1 + e2) * (e2 + 1.0)));
    acc.add(l * f2 * c * delta * eps * (gamma + weighted(gamma + sb, e2 * e2)));
    acc.add(l * l * m * m * c * c * delta * delta * e2 * e2);
    acc.add(2.0 * l * m * m * c * c * delta * (eps + 1.0) * e2 * e2);
    acc.add(l * m * m * c * c * (eps + 1.0) * (eps + 1.0) * e3);
    acc.add(l * l * m * c * c * ((2.0 * eps + 1.0) * e1 * e1 + 2.0 * delta * e1 * e2));
    acc.add(
        l * m * c * (c * (2.0 * delta * e2 * e2 + (2.0 * eps + 1.0) * e3) + weighted(2.0 * gamma + sb, delta * e2 * e2 + (eps + 1.0) * e3)),
    );
    acc.add(l * gamma * weighted(gamma + sb, e3));
    acc.add(a * d * d * eps);
    acc.add(a * d * d * eps * e4 * e4);
    acc.add(a * d * d * e4 * e4);
    acc.add(a * d * weighted(sr, e4 * e4) * (eps + 1.0));
    acc.value()
}

pub fn interference_term(k: usize, i: usize, csi: &StatisticalCsi, couplings: &LosCouplings) -> f64 {
    let Dims { l, m, a, delta } = dims(csi);
    let (uk, ui) = (&csi.users[k], &csi.users[i]);
    let (ck, dk, ek, gk) = (uk.c, uk.d, uk.rician, uk.gamma);
    let (ci, di, ei, gi) = (ui.c, ui.d, ui.rician, ui.gamma);
    let (e1, e2, e3, e4) = (uk.e1, uk.e2, uk.e3, uk.e4);
    let (sb, sr) = (uk.pilot_noise_bs, uk.pilot_noise_rdars);
    let (fk, fi) = (couplings.f[k], couplings.f[i]);
    let (fk2, fi2) = (fk.norm_sqr(), fi.norm_sqr());
    let hr_ki = csi.los_gram_reflect[k][i];
    let hr_ik = csi.los_gram_reflect[i][k];
    let h_ki = csi.los_gram[k][i];
    let (g_ki, g_ik) = (couplings.g[k][i], couplings.g[i][k]);
    let root = (ck * ci * dk * di).sqrt();

    let mut acc = CompensatedSum::new();
    acc.add(l * l * fk2 * fi2 * ck * ci * delta * delta * ek * ei);
    acc.add(l * fk2 * ck * delta * ek * (ci * (l * m * delta + m * ei + m + 2.0 * l * e1) + gi));
    acc.add(
        l * fi2 * ci * delta * ei * (ck * e2 * (l * m * delta * e2 + m * ek * e2 + m * e2 + 2.0 * l * e1) + weighted(gk + sb, e2 * e2)),
    );
    acc.add(l * l * m * m * ck * ci * delta * delta * e2 * e2);
    acc.add(l * m * m * ck * ci * (delta * (ek + ei + 2.0) * e2 * e2 + (ek + 1.0) * (ei + 1.0) * e3));
    acc.add(l * l * m * ck * ci * e1 * ((ek + ei + 1.0) * e1 + 2.0 * delta * e2));
    acc.add(l * l * ck * ci * ek * ei * e1 * (hr_ki.norm_sqr() * e1 + 2.0 * delta * (fk.conj() * fi * hr_ik).re));
    acc.add(l * gi * weighted(gk + sb, e3));
    acc.add(l * m * (weighted(gk + sb, ci * (delta * e2 * e2 + (ei + 1.0) * e3)) + gi * ck * (delta * e2 * e2 + (ek + 1.0) * e3)));
    acc.add(dk * di * ek * ei * g_ki.norm_sqr());
    acc.add(a * di * (dk * ek + (ei + 1.0) * weighted(dk + sr, e4 * e4)));
    acc.add(2.0 * (fk.conj() * fi * g_ik * (l * root * delta * ek * ei) + (h_ki - g_ki) * g_ik * (l * root * ek * ei * e1)).re);
    acc.value()
}

/// All four term families at the couplings' phase configuration.
pub fn breakdown_from_couplings(csi: &StatisticalCsi, couplings: &LosCouplings) -> RateBreakdown {
    let k_users = csi.num_users();
    let mut interference = vec![vec![0.0; k_users]; k_users];
    for (k, row) in interference.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            if i != k {
                *v = interference_term(k, i, csi, couplings);
            }
        }
    }
    RateBreakdown {
        signal: (0..k_users).map(|k| signal_term(k, csi, couplings)).collect(),
        leak: (0..k_users).map(|k| leak_term(k, csi, couplings)).collect(),
        noise: (0..k_users).map(|k| noise_term(k, csi, couplings)).collect(),
        interference,
    }
}

pub fn rate_breakdown(csi: &StatisticalCsi, theta: &PhaseShifts) -> Result<RateBreakdown> {
    Ok(breakdown_from_couplings(csi, &los_couplings(csi, theta)?))
}

fn check_powers(p: &[f64], users: usize) -> Result<()> {
    if p.len() != users {
        return Err(Error::Dimension(format!("{} powers for {users} users", p.len())));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("transmit power must be finite and nonnegative, got {x}")));
    }
    Ok(())
}

/// `p_k E_signal / (p_k E_leak + Σ_{i≠k} p_i I_ki + E_noise)`; zero when
/// the numerator vanishes.
pub fn sinr(k: usize, p: &[f64], bd: &RateBreakdown) -> Result<f64> {
    check_powers(p, bd.num_users())?;
    Ok(sinr_unchecked(k, p, bd))
}

pub(crate) fn interference_power(k: usize, p: &[f64], bd: &RateBreakdown) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, pi) in p.iter().enumerate() {
        if i != k {
            acc.add(pi * bd.interference[k][i]);
        }
    }
    acc.value()
}

pub(crate) fn sinr_unchecked(k: usize, p: &[f64], bd: &RateBreakdown) -> f64 {
    let num = p[k] * bd.signal[k];
    if num == 0.0 {
        return 0.0;
    }
    num / (p[k] * bd.leak[k] + interference_power(k, p, bd) + bd.noise[k])
}

pub fn sinr_all(p: &[f64], bd: &RateBreakdown) -> Result<Vec<f64>> {
    check_powers(p, bd.num_users())?;
    Ok((0..bd.num_users()).map(|k| sinr_unchecked(k, p, bd)).collect())
}

/// Pilot-overhead factor applied to `log(1 + SINR)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrelogMode {
    /// `(τ_c - τ) / τ_c`, the fraction of the coherence interval left for data.
    #[default]
    Coherence,
    /// `(τ_c - τ) / τ`, as printed in the original rate expression.
    PilotRatio,
}

impl PrelogMode {
    pub fn factor(self, tau: usize, tau_c: usize) -> f64 {
        let data = tau_c.saturating_sub(tau) as f64;
        match self {
            PrelogMode::Coherence => data / tau_c as f64,
            PrelogMode::PilotRatio => data / tau as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    /// bits/s/Hz
    #[default]
    Two,
    /// nats/s/Hz
    Natural,
}

/// Rate of one user for a given SINR.
pub fn rate(sinr: f64, tau: usize, tau_c: usize, mode: PrelogMode, base: LogBase) -> f64 {
    let nats = sinr.ln_1p();
    let r = match base {
        LogBase::Two => nats / core::f64::consts::LN_2,
        LogBase::Natural => nats,
    };
    mode.factor(tau, tau_c) * r
}

/// Per-user SINRs, rates and the weighted sum at a power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub weighted_sum: f64,
}

pub fn rate_report(
    p: &[f64],
    weights: &[f64],
    bd: &RateBreakdown,
    tau: usize,
    tau_c: usize,
    mode: PrelogMode,
    base: LogBase,
) -> Result<RateReport> {
    let sinr = sinr_all(p, bd)?;
    if weights.len() != sinr.len() {
        return Err(Error::Dimension("one weight per user is required".into()));
    }
    let rate: Vec<f64> = sinr.iter().map(|&s| self::rate(s, tau, tau_c, mode, base)).collect();
    let weighted_sum = rate.iter().zip(weights).map(|(r, w)| r * w).sum();
    Ok(RateReport { sinr, rate, weighted_sum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prelog_modes() {
        assert!((PrelogMode::Coherence.factor(8, 196) - 188.0 / 196.0).abs() < 1e-15);
        assert!((PrelogMode::PilotRatio.factor(8, 196) - 188.0 / 8.0).abs() < 1e-15);
        assert_eq!(rate(0.0, 8, 196, PrelogMode::Coherence, LogBase::Two), 0.0);
        assert!((rate(1.0, 0, 1, PrelogMode::Coherence, LogBase::Two) - 1.0).abs() < 1e-15);
    }

    fn toy() -> RateBreakdown {
        RateBreakdown {
            signal: vec![4.0, 9.0],
            leak: vec![1.0, 2.0],
            noise: vec![0.5, 0.25],
            interference: vec![vec![0.0, 0.3], vec![0.7, 0.0]],
        }
    }

    #[test]
    fn sinr_assembly() {
        let bd = toy();
        let s = sinr(0, &[2.0, 3.0], &bd).unwrap();
        assert!((s - 8.0 / (2.0 + 0.9 + 0.5)).abs() < 1e-15);
        assert_eq!(sinr(0, &[0.0, 0.0], &bd).unwrap(), 0.0);
        assert!(sinr(0, &[-1.0, 0.0], &bd).is_err());
        let r = rate_report(&[0.0, 0.0], &[0.5, 0.5], &bd, 2, 10, PrelogMode::Coherence, LogBase::Two).unwrap();
        assert_eq!(r.weighted_sum, 0.0);
    }

    #[test]
    fn sinr_increases_with_power_at_fixed_noise() {
        let bd = toy();
        let mut last = 0.0;
        for c in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let s = sinr(1, &[0.0, c], &bd).unwrap();
            assert!(s > last);
            last = s;
        }
    }
}
