//! Fractional-programming reformulation of the weighted-sum-rate problem and
//! the block coordinate ascent over `(η, χ, p, θ)`.
//!
//! With Lagrangian-dual and quadratic transforms the objective becomes
//!
//! ```text
//! f_q = Σ_k w_k ln(1+η_k) - w_k η_k + 2χ_k sqrt(w_k (1+η_k) p_k E_k^sig)
//!       - χ_k² (p_k E_k^sig + p_k E_k^leak + Σ_{i≠k} p_i I_ki + E_k^noise)
//! ```
//!
//! which is concave in each of `η`, `χ` and `p` separately with closed-form
//! maximizers; `θ` is handled by [`crate::phase_rga`] or [`crate::phase_mm`].
//! Every block update is an exact or monotone ascent step, so the `f_q`
//! trace is nondecreasing. Logarithms are natural here; reported rates use
//! [`LogBase`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::{interference_power, rate_breakdown, sinr_all, LogBase, PrelogMode, RateBreakdown};
use crate::channel::PhaseShifts;
use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::phase_mm::{mm_solve, MmForm, MmOptions};
use crate::phase_rga::{rga_solve, verify_reconstruction, PhaseCoefficients, QuarticForm, RgaOptions};
use crate::scenario::{StatisticalCsi, SystemConfig};

/// The blocks held fixed while `f_q` is evaluated or `θ` is updated.
#[derive(Debug, Clone, Copy)]
pub struct FixedBlocks<'a> {
    pub weights: &'a [f64],
    pub p: &'a [f64],
    pub eta: &'a [f64],
    pub chi: &'a [f64],
}

/// `p_k E_sig + p_k E_leak + Σ_{i≠k} p_i I_ki + E_noise`
fn full_denominator(k: usize, p: &[f64], bd: &RateBreakdown) -> f64 {
    p[k] * bd.signal[k] + p[k] * bd.leak[k] + interference_power(k, p, bd) + bd.noise[k]
}

fn check_lengths(k_users: usize, parts: &[(&str, usize)]) -> Result<()> {
    for (name, len) in parts {
        if *len != k_users {
            return Err(Error::Dimension(format!("{len} entries in {name} for {k_users} users")));
        }
    }
    Ok(())
}

/// The FP objective `f_q`.
pub fn eval_f_q(blocks: &FixedBlocks<'_>, bd: &RateBreakdown) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 0..bd.num_users() {
        let (w, p, eta, chi) = (blocks.weights[k], blocks.p[k], blocks.eta[k], blocks.chi[k]);
        acc.add(w * eta.ln_1p());
        acc.add(-w * eta);
        acc.add(2.0 * chi * (w * (1.0 + eta) * p * bd.signal[k]).sqrt());
        acc.add(-chi * chi * full_denominator(k, blocks.p, bd));
    }
    acc.value()
}

/// The Lagrangian-dual objective
/// `f_r = Σ w ln(1+η) - w η + w (1+η) p E_sig / Den_k`, which equals
/// `f_q` once `χ` is at its optimum.
pub fn eval_f_r(weights: &[f64], p: &[f64], eta: &[f64], bd: &RateBreakdown) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 0..bd.num_users() {
        let (w, e) = (weights[k], eta[k]);
        acc.add(w * e.ln_1p() - w * e);
        let num = w * (1.0 + e) * p[k] * bd.signal[k];
        if num != 0.0 {
            acc.add(num / full_denominator(k, p, bd));
        }
    }
    acc.value()
}

/// `Σ w_k ln(1 + SINR_k)`, the value `f_q` attains at optimal duals.
pub fn weighted_log_rate(weights: &[f64], p: &[f64], bd: &RateBreakdown) -> Result<f64> {
    let sinr = sinr_all(p, bd)?;
    Ok(sinr.iter().zip(weights).map(|(s, w)| w * s.ln_1p()).sum())
}

/// `η_k = (κ̄² + κ̄ sqrt(κ̄² + 4)) / 2` with `κ̄_k = sqrt(χ_k² p_k E_sig / w_k)`.
pub fn update_eta(weights: &[f64], p: &[f64], chi: &[f64], bd: &RateBreakdown) -> Result<Vec<f64>> {
    let k_users = bd.num_users();
    check_lengths(k_users, &[("weights", weights.len()), ("p", p.len()), ("chi", chi.len())])?;
    (0..k_users)
        .map(|k| {
            let w = weights[k];
            if !(w > 0.0) {
                return Err(Error::Domain(format!("user {k} has weight {w}; the dual update needs w > 0")));
            }
            let kappa = chi[k] * (p[k] * bd.signal[k] / w).sqrt();
            Ok((kappa * kappa + kappa * (kappa * kappa + 4.0).sqrt()) / 2.0)
        })
        .collect()
}

/// `χ_k = sqrt(w_k (1+η_k) p_k E_sig) / Den_k`; zero when the numerator is.
pub fn update_chi(weights: &[f64], p: &[f64], eta: &[f64], bd: &RateBreakdown) -> Result<Vec<f64>> {
    let k_users = bd.num_users();
    check_lengths(k_users, &[("weights", weights.len()), ("p", p.len()), ("eta", eta.len())])?;
    (0..k_users)
        .map(|k| {
            let num = (weights[k] * (1.0 + eta[k]) * p[k] * bd.signal[k]).sqrt();
            let den = full_denominator(k, p, bd);
            if den == 0.0 {
                if num == 0.0 {
                    return Ok(0.0);
                }
                return Err(Error::Domain(format!("user {k}: zero SINR denominator")));
            }
            Ok(num / den)
        })
        .collect()
}

/// `p_k = min(p_max, w_k (1+η_k) E_sig χ_k² / [χ_k² (E_sig + E_leak) + Σ_{i≠k} χ_i² I_ik]²)`.
/// The denominator collects the interference user `k` causes at the others.
pub fn update_power(weights: &[f64], eta: &[f64], chi: &[f64], bd: &RateBreakdown, p_max: f64) -> Result<Vec<f64>> {
    let k_users = bd.num_users();
    check_lengths(k_users, &[("weights", weights.len()), ("eta", eta.len()), ("chi", chi.len())])?;
    Ok((0..k_users)
        .map(|k| {
            let num = weights[k] * (1.0 + eta[k]) * bd.signal[k] * chi[k] * chi[k];
            if num == 0.0 {
                return 0.0;
            }
            let mut den = CompensatedSum::new();
            den.add(chi[k] * chi[k] * (bd.signal[k] + bd.leak[k]));
            for i in (0..k_users).filter(|&i| i != k) {
                den.add(chi[i] * chi[i] * bd.interference[i][k]);
            }
            let den = den.value();
            if den <= 0.0 {
                return p_max;
            }
            (num / (den * den)).clamp(0.0, p_max)
        })
        .collect())
}

/// Phase-block solver used inside the BCD loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSolver {
    Rga(RgaOptions),
    Mm(MmOptions),
    /// Keep the initial phases.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdOptions {
    pub phase_solver: PhaseSolver,
    /// When false the powers stay at their initial values.
    pub optimize_power: bool,
    pub max_iter: usize,
    /// Relative `f_q` change that ends the loop.
    pub tol: f64,
    /// Relative tolerance of the compact-form safety check run before each
    /// phase update.
    pub reconstruction_tol: f64,
    pub prelog: PrelogMode,
    pub log_base: LogBase,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            phase_solver: PhaseSolver::Rga(RgaOptions::default()),
            optimize_power: true,
            max_iter: 50,
            tol: 1e-6,
            reconstruction_tol: 1e-9,
            prelog: PrelogMode::default(),
            log_base: LogBase::default(),
        }
    }
}

/// Iterate of the BCD loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta: PhaseShifts,
    pub p: Vec<f64>,
    pub eta: Vec<f64>,
    pub chi: Vec<f64>,
    /// `f_q` after initialization and after every full iteration.
    pub objective_trace: Vec<f64>,
    /// Reported weighted sum rate at the same points.
    pub wsr_trace: Vec<f64>,
    /// Powers at the same points as `objective_trace`.
    pub power_trace: Vec<Vec<f64>>,
    /// SINRs at the same points as `objective_trace`.
    pub sinr_trace: Vec<Vec<f64>>,
    /// `f_q` after every individual block update.
    pub block_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Phase updates discarded because they lowered `f_q`.
    pub rejected_phase_steps: usize,
}

impl OptimizerState {
    pub fn blocks<'a>(&'a self, weights: &'a [f64]) -> FixedBlocks<'a> {
        FixedBlocks { weights, p: &self.p, eta: &self.eta, chi: &self.chi }
    }
}

/// Reported weighted sum rate of a power allocation.
pub fn weighted_sum_rate(cfg: &SystemConfig, p: &[f64], bd: &RateBreakdown, opts: &BcdOptions) -> Result<f64> {
    let r = crate::analytic_rate::rate_report(p, &cfg.weights(), bd, cfg.pilot_len, cfg.coherence_len, opts.prelog, opts.log_base)?;
    Ok(r.weighted_sum)
}

/// Initial state: the given phases and powers, `η` at the current SINRs and
/// `χ` from its closed form.
pub fn initial_state(cfg: &SystemConfig, csi: &StatisticalCsi, theta: PhaseShifts, p: Vec<f64>) -> Result<OptimizerState> {
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0 && **x <= cfg.p_max)) {
        return Err(Error::Domain(format!("initial power {x} outside [0, {}]", cfg.p_max)));
    }
    for &n in csi.indicator.reflecting() {
        if (theta.get(n).norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("initial phase {n} is not unit modulus")));
        }
    }
    let weights = cfg.weights();
    let bd = rate_breakdown(csi, &theta)?;
    let eta = sinr_all(&p, &bd)?;
    let chi = update_chi(&weights, &p, &eta, &bd)?;
    Ok(OptimizerState {
        theta,
        p,
        eta,
        chi,
        objective_trace: Vec::new(),
        wsr_trace: Vec::new(),
        power_trace: Vec::new(),
        sinr_trace: Vec::new(),
        block_trace: Vec::new(),
        iterations: 0,
        converged: false,
        rejected_phase_steps: 0,
    })
}

/// Default initialization: all-ones phases and full power.
pub fn default_state(cfg: &SystemConfig, csi: &StatisticalCsi) -> Result<OptimizerState> {
    initial_state(cfg, csi, PhaseShifts::ones(csi.elements), vec![cfg.p_max; cfg.num_users()])
}

/// Update the reflecting phases at fixed `(η, χ, p)`; returns the new phases
/// when they do not lower `f_q`.
fn phase_step(
    coef: &PhaseCoefficients,
    csi: &StatisticalCsi,
    blocks: &FixedBlocks<'_>,
    theta: &PhaseShifts,
    solver: &PhaseSolver,
    reconstruction_tol: f64,
) -> Result<Option<PhaseShifts>> {
    let form = QuarticForm::build(coef, blocks);
    verify_reconstruction(&form, csi, blocks, theta, reconstruction_tol)?;
    let start = theta.reflecting(&csi.indicator);
    let next = match solver {
        PhaseSolver::None => return Ok(None),
        PhaseSolver::Rga(o) => rga_solve(&form, &start, o)?.theta,
        PhaseSolver::Mm(o) => {
            let mm = MmForm::build(&form, o)?;
            mm_solve(&mm, &start, o)?.theta
        }
    };
    let before = form.evaluate(&start);
    let after = form.evaluate(&next);
    if after < before - 1e-12 * before.abs().max(1.0) {
        return Ok(None);
    }
    let mut out = theta.clone();
    out.set_reflecting(&csi.indicator, &next);
    Ok(Some(out))
}

fn record(state: &mut OptimizerState, cfg: &SystemConfig, bd: &RateBreakdown, opts: &BcdOptions) -> Result<()> {
    state.wsr_trace.push(weighted_sum_rate(cfg, &state.p, bd, opts)?);
    state.power_trace.push(state.p.clone());
    state.sinr_trace.push(sinr_all(&state.p, bd)?);
    Ok(())
}

/// Block coordinate ascent in the order `η → χ → p → χ → θ`, starting from
/// `init`, until the relative change of `f_q` over one iteration falls below
/// `tol` or `max_iter` iterations have run.
pub fn bcd_solve(cfg: &SystemConfig, csi: &StatisticalCsi, init: OptimizerState, opts: &BcdOptions) -> Result<OptimizerState> {
    let weights = cfg.weights();
    let k_users = cfg.num_users();
    check_lengths(k_users, &[("p", init.p.len()), ("eta", init.eta.len()), ("chi", init.chi.len())])?;
    let coef = match opts.phase_solver {
        PhaseSolver::None => None,
        _ => Some(PhaseCoefficients::extract(csi)),
    };
    let mut state = init;
    let mut bd = rate_breakdown(csi, &state.theta)?;
    let mut value = eval_f_q(&state.blocks(&weights), &bd);
    state.objective_trace.push(value);
    state.block_trace.push(value);
    record(&mut state, cfg, &bd, opts)?;
    for it in 0..opts.max_iter {
        state.eta = update_eta(&weights, &state.p, &state.chi, &bd)?;
        state.block_trace.push(eval_f_q(&state.blocks(&weights), &bd));
        state.chi = update_chi(&weights, &state.p, &state.eta, &bd)?;
        state.block_trace.push(eval_f_q(&state.blocks(&weights), &bd));
        if opts.optimize_power {
            state.p = update_power(&weights, &state.eta, &state.chi, &bd, cfg.p_max)?;
            state.block_trace.push(eval_f_q(&state.blocks(&weights), &bd));
            state.chi = update_chi(&weights, &state.p, &state.eta, &bd)?;
            state.block_trace.push(eval_f_q(&state.blocks(&weights), &bd));
        }
        if let Some(coef) = &coef {
            let blocks = state.blocks(&weights);
            match phase_step(coef, csi, &blocks, &state.theta, &opts.phase_solver, opts.reconstruction_tol)? {
                Some(theta) => {
                    state.theta = theta;
                    bd = rate_breakdown(csi, &state.theta)?;
                }
                None => state.rejected_phase_steps += 1,
            }
            state.block_trace.push(eval_f_q(&state.blocks(&weights), &bd));
        }
        let next = eval_f_q(&state.blocks(&weights), &bd);
        state.objective_trace.push(next);
        record(&mut state, cfg, &bd, opts)?;
        state.iterations = it + 1;
        let change = (next - value).abs() / next.abs().max(1.0);
        value = next;
        if change < opts.tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}
