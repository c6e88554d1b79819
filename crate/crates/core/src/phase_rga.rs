//! Phase design by Riemannian gradient ascent on the complex circle manifold.
//!
//! The FP objective is a polynomial in `f_k = b_k^T θ` (θ restricted to the
//! reflecting elements, `b_k(n) = a_N(n)^* h̄_k(n)`):
//!
//! ```text
//! f_q(θ) = Σ_{k,i} α_{ki} |f_k|² |f_i|²  +  θ^H K̃ θ  +  const
//!        = z^H J̃ z + θ^H K̃ θ + const,      z = θ^* ⊗ θ,  J̃ = Σ α_{ki} C_k^T ⊗ C_i
//! ```
//!
//! with `C_k = b_k^* b_k^T`. [`PhaseCoefficients`] holds the θ-independent
//! scalars of the closed-form rate terms viewed as polynomials in `f`;
//! [`QuarticForm`] folds in the fixed duals and powers. Terms such as
//! `θ^H diag(v) θ` that are constant on the manifold are absorbed in `const`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::{interference_term, leak_term, noise_term, LosCouplings, RateBreakdown};
use crate::error::{Error, Result};
use crate::fp_bcd::{eval_f_q, FixedBlocks};
use crate::linalg::{CMatrix, CVector, CompensatedSum};
use crate::scenario::StatisticalCsi;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Closed-form rate terms as polynomials in the couplings `f_k`:
///
/// * `sqrt(E_signal_k) = s1_k |f_k|² + s2_k`
/// * `E_leak_k = l1_k |f_k|² + l0_k`, `E_noise_k = n1_k |f_k|² + n0_k`
/// * `I_ki = u1 |f_k|²|f_i|² + u2 |f_k|² + u3 |f_i|² + 2 Re{x_ki f_k^* f_i} + u0`
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCoefficients {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub l1: Vec<f64>,
    pub l0: Vec<f64>,
    pub n1: Vec<f64>,
    pub n0: Vec<f64>,
    pub u1: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
    pub u3: Vec<Vec<f64>>,
    pub u0: Vec<Vec<f64>>,
    pub x: Vec<Vec<Complex64>>,
    /// `b_k` on the reflecting elements, so that `f_k = b_k^T θ_refl`.
    pub b: Vec<CVector>,
}

fn weighted(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        x * e
    }
}

impl PhaseCoefficients {
    /// Expand the rate terms for the statistics in `csi`. The constant parts
    /// are the closed-form terms evaluated at `f = 0`.
    pub fn extract(csi: &StatisticalCsi) -> Self {
        let k_users = csi.num_users();
        let l = csi.bs_antennas as f64;
        let m = csi.num_reflecting() as f64;
        let a = csi.num_connected() as f64;
        let delta = csi.rician_rb;
        let mut at_zero: LosCouplings = csi.reference.clone();
        for f in &mut at_zero.f {
            *f = ZERO;
        }
        let mut out = Self {
            s1: vec![0.0; k_users],
            s2: vec![0.0; k_users],
            l1: vec![0.0; k_users],
            l0: vec![0.0; k_users],
            n1: vec![0.0; k_users],
            n0: vec![0.0; k_users],
            u1: vec![vec![0.0; k_users]; k_users],
            u2: vec![vec![0.0; k_users]; k_users],
            u3: vec![vec![0.0; k_users]; k_users],
            u0: vec![vec![0.0; k_users]; k_users],
            x: vec![vec![ZERO; k_users]; k_users],
            b: csi
                .user_los
                .iter()
                .map(|h| {
                    CVector::from_iterator(csi.num_reflecting(), csi.indicator.reflecting().iter().map(|&n| csi.rdars_los[n].conj() * h[n]))
                })
                .collect(),
        };
        for (k, u) in csi.users.iter().enumerate() {
            let (c, eps) = (u.c, u.rician);
            out.s1[k] = l * c * delta * eps;
            out.s2[k] = l * (m * c * delta * u.e2 + (m * c * (eps + 1.0) + u.gamma) * u.e1) + a * (u.d * eps + u.e4 * u.d);
            out.n1[k] = csi.noise_bs * out.s1[k];
            out.n0[k] = noise_term(k, csi, &at_zero);
            out.l1[k] =
                l * c * c * delta * eps * (m * (l * delta + eps + 1.0) * (u.e2 * u.e2 + 1.0) + 2.0 * (l * u.e1 + u.e2) * (u.e2 + 1.0))
                    + l * c * delta * eps * (u.gamma + weighted(u.gamma + u.pilot_noise_bs, u.e2 * u.e2));
            out.l0[k] = leak_term(k, csi, &at_zero);
        }
        for k in 0..k_users {
            let uk = &csi.users[k];
            let (ck, dk, ek) = (uk.c, uk.d, uk.rician);
            let (e1, e2) = (uk.e1, uk.e2);
            for i in (0..k_users).filter(|&i| i != k) {
                let ui = &csi.users[i];
                let (ci, di, ei) = (ui.c, ui.d, ui.rician);
                out.u1[k][i] = l * l * ck * ci * delta * delta * ek * ei;
                out.u2[k][i] = l * ck * delta * ek * (ci * (l * m * delta + m * ei + m + 2.0 * l * e1) + ui.gamma);
                out.u3[k][i] = l
                    * ci
                    * delta
                    * ei
                    * (ck * e2 * (l * m * delta * e2 + m * ek * e2 + m * e2 + 2.0 * l * e1)
                        + weighted(uk.gamma + uk.pilot_noise_bs, e2 * e2));
                out.x[k][i] = csi.los_gram_reflect[i][k] * (l * l * ck * ci * ek * ei * e1 * delta)
                    + csi.reference.g[i][k] * (l * (ck * ci * dk * di).sqrt() * delta * ek * ei);
                out.u0[k][i] = interference_term(k, i, csi, &at_zero);
            }
        }
        out
    }

    pub fn num_users(&self) -> usize {
        self.s1.len()
    }

    pub fn dim(&self) -> usize {
        self.b.first().map_or(0, |b| b.len())
    }

    /// `f_k = b_k^T θ` for reflecting phases `θ`.
    pub fn couplings(&self, theta: &[Complex64]) -> Vec<Complex64> {
        self.b.iter().map(|b| b.iter().zip(theta).map(|(x, t)| x * t).sum()).collect()
    }

    /// Rate terms rebuilt from the coefficients at couplings `f`.
    pub fn breakdown(&self, f: &[Complex64]) -> RateBreakdown {
        let k_users = self.num_users();
        let f2: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
        let mut interference = vec![vec![0.0; k_users]; k_users];
        for k in 0..k_users {
            for i in (0..k_users).filter(|&i| i != k) {
                let mut acc = CompensatedSum::new();
                acc.add(self.u1[k][i] * f2[k] * f2[i]);
                acc.add(self.u2[k][i] * f2[k]);
                acc.add(self.u3[k][i] * f2[i]);
                acc.add(2.0 * (self.x[k][i] * f[k].conj() * f[i]).re);
                acc.add(self.u0[k][i]);
                interference[k][i] = acc.value();
            }
        }
        RateBreakdown {
            signal: (0..k_users).map(|k| (self.s1[k] * f2[k] + self.s2[k]).powi(2)).collect(),
            leak: (0..k_users).map(|k| self.l1[k] * f2[k] + self.l0[k]).collect(),
            noise: (0..k_users).map(|k| self.n1[k] * f2[k] + self.n0[k]).collect(),
            interference,
        }
    }
}

/// `f_q` on the reflecting phases at fixed `(w, p, η, χ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticForm {
    /// `α_{ki}`, coefficient of `|f_k|²|f_i|²` (all entries are ≤ 0).
    pub alpha: Vec<Vec<f64>>,
    /// Coefficient of `|f_k|²`.
    pub beta: Vec<f64>,
    /// `ξ_{ki}`, entering as `2 Re{ξ_{ki} f_k^* f_i}`; zero on the diagonal.
    pub xi: Vec<Vec<Complex64>>,
    /// Part of `β_k` from the signal cross term, `-χ_k² p_k s1_k s2_k`.
    pub signal_cross: Vec<f64>,
    pub constant: f64,
    pub b: Vec<CVector>,
}

impl QuarticForm {
    pub fn build(coef: &PhaseCoefficients, blocks: &FixedBlocks<'_>) -> Self {
        let k_users = coef.num_users();
        let mut alpha = vec![vec![0.0; k_users]; k_users];
        let mut beta = vec![0.0; k_users];
        let mut xi = vec![vec![ZERO; k_users]; k_users];
        let mut signal_cross = vec![0.0; k_users];
        let mut constant = CompensatedSum::new();
        for k in 0..k_users {
            let (w, p, eta, chi) = (blocks.weights[k], blocks.p[k], blocks.eta[k], blocks.chi[k]);
            let chi2 = chi * chi;
            let amp = 2.0 * chi * (w * (1.0 + eta) * p).sqrt();
            let (s1, s2) = (coef.s1[k], coef.s2[k]);
            constant.add(w * eta.ln_1p() - w * eta);
            constant.add(amp * s2);
            constant.add(-chi2 * (p * s2 * s2 + p * coef.l0[k] + coef.n0[k]));
            alpha[k][k] -= chi2 * p * s1 * s1;
            signal_cross[k] = -chi2 * p * s1 * s2;
            beta[k] += amp * s1 - chi2 * p * (2.0 * s1 * s2 + coef.l1[k]) - chi2 * coef.n1[k];
            for i in (0..k_users).filter(|&i| i != k) {
                let pi = blocks.p[i];
                constant.add(-chi2 * pi * coef.u0[k][i]);
                alpha[k][i] -= chi2 * pi * coef.u1[k][i];
                beta[k] -= chi2 * pi * coef.u2[k][i];
                beta[i] -= chi2 * pi * coef.u3[k][i];
                xi[k][i] = coef.x[k][i] * (-chi2 * pi);
            }
        }
        Self { alpha, beta, xi, signal_cross, constant: constant.value(), b: coef.b.clone() }
    }

    pub fn dim(&self) -> usize {
        self.b.first().map_or(0, |b| b.len())
    }

    pub fn num_users(&self) -> usize {
        self.beta.len()
    }

    pub fn couplings(&self, theta: &[Complex64]) -> Vec<Complex64> {
        self.b.iter().map(|b| b.iter().zip(theta).map(|(x, t)| x * t).sum()).collect()
    }

    /// Quartic part `Σ α |f_k|²|f_i|²`.
    pub fn quartic(&self, f: &[Complex64]) -> f64 {
        let f2: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
        let mut acc = CompensatedSum::new();
        for (k, row) in self.alpha.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                acc.add(a * f2[k] * f2[i]);
            }
        }
        acc.value()
    }

    /// Quadratic part `θ^H K̃ θ`.
    pub fn quadratic(&self, f: &[Complex64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for (k, row) in self.xi.iter().enumerate() {
            acc.add(self.beta[k] * f[k].norm_sqr());
            for (i, x) in row.iter().enumerate() {
                if i != k {
                    acc.add(2.0 * (x * f[k].conj() * f[i]).re);
                }
            }
        }
        acc.value()
    }

    pub fn evaluate(&self, theta: &[Complex64]) -> f64 {
        let f = self.couplings(theta);
        self.quartic(&f) + self.quadratic(&f) + self.constant
    }

    /// Euclidean gradient `2 ∂f_q/∂θ^*`, using only the couplings.
    pub fn gradient(&self, theta: &[Complex64]) -> CVector {
        let k_users = self.num_users();
        let f = self.couplings(theta);
        let f2: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
        // ∂/∂θ^* = Σ_k conj(b_k) · coeff_k
        let mut coeff = vec![ZERO; k_users];
        for k in 0..k_users {
            let mut quartic = 0.0;
            for i in 0..k_users {
                quartic += (self.alpha[k][i] + self.alpha[i][k]) * f2[i];
            }
            coeff[k] += f[k] * (quartic + self.beta[k]);
            for i in (0..k_users).filter(|&i| i != k) {
                coeff[k] += self.xi[k][i] * f[i];
                coeff[i] += self.xi[k][i].conj() * f[k];
            }
        }
        let mut g = CVector::zeros(self.dim());
        for (b, c) in self.b.iter().zip(&coeff) {
            for (gi, bi) in g.iter_mut().zip(b.iter()) {
                *gi += bi.conj() * c * 2.0;
            }
        }
        g
    }

    /// `C_k = b_k^* b_k^T`
    pub fn c_matrix(&self, k: usize) -> CMatrix {
        let b = &self.b[k];
        CMatrix::from_fn(b.len(), b.len(), |r, c| b[r].conj() * b[c])
    }

    /// `D_{k,i} = b_k^* b_i^T`, so that `θ^H D_{k,i} θ = f_k^* f_i`.
    pub fn d_matrix(&self, k: usize, i: usize) -> CMatrix {
        let (bk, bi) = (&self.b[k], &self.b[i]);
        CMatrix::from_fn(bk.len(), bk.len(), |r, c| bk[r].conj() * bi[c])
    }

    /// Dense `K̃ = Σ β_k C_k + Σ_{k≠i} (ξ_{ki} D_{k,i} + ξ_{ki}^* D_{k,i}^H)`.
    pub fn k_tilde(&self) -> CMatrix {
        let m = self.dim();
        let mut out = CMatrix::zeros(m, m);
        for k in 0..self.num_users() {
            out += self.c_matrix(k) * Complex64::new(self.beta[k], 0.0);
            for i in (0..self.num_users()).filter(|&i| i != k) {
                let d = self.d_matrix(k, i);
                out += &d * self.xi[k][i] + d.adjoint() * self.xi[k][i].conj();
            }
        }
        out
    }

    /// Dense `J̃ = Σ α_{ki} C_k^T ⊗ C_i`; `M² x M²`, for small `M` only.
    pub fn j_tilde(&self) -> CMatrix {
        let m = self.dim();
        let mut out = CMatrix::zeros(m * m, m * m);
        for k in 0..self.num_users() {
            let ck_t = self.c_matrix(k).transpose();
            for i in 0..self.num_users() {
                let a = self.alpha[k][i];
                if a != 0.0 {
                    out += ck_t.kronecker(&self.c_matrix(i)) * Complex64::new(a, 0.0);
                }
            }
        }
        out
    }

    /// Compact-form value `z^H J̃ z + θ^H K̃ θ + const` from dense matrices.
    pub fn evaluate_dense(&self, j: &CMatrix, k: &CMatrix, theta: &[Complex64]) -> f64 {
        let t = CVector::from_column_slice(theta);
        let z = t.conjugate().kronecker(&t);
        (z.adjoint() * j * &z)[(0, 0)].re + (t.adjoint() * k * &t)[(0, 0)].re + self.constant
    }

    /// Gradient written literally as
    /// `2 [z^T J̃^T (θ ⊗ I) + z^H J̃ (I ⊗ θ) + θ^T K̃^T]^T` with dense matrices.
    pub fn gradient_dense(&self, j: &CMatrix, k: &CMatrix, theta: &[Complex64]) -> CVector {
        let m = theta.len();
        let t = CVector::from_column_slice(theta);
        let z = t.conjugate().kronecker(&t);
        let eye = CMatrix::identity(m, m);
        let first = z.transpose() * j.transpose() * t.kronecker(&eye);
        let second = z.adjoint() * j * eye.kronecker(&t);
        let third = t.transpose() * k.transpose();
        (first + second + third).transpose() * Complex64::new(2.0, 0.0)
    }

    /// Compare the compact form against the direct FP objective at `theta`.
    /// Returns the relative discrepancy.
    pub fn reconstruction_error(
        &self,
        csi: &StatisticalCsi,
        blocks: &FixedBlocks<'_>,
        theta_full: &crate::channel::PhaseShifts,
    ) -> Result<f64> {
        let bd = crate::analytic_rate::rate_breakdown(csi, theta_full)?;
        let direct = eval_f_q(blocks, &bd);
        let compact = self.evaluate(&theta_full.reflecting(&csi.indicator));
        Ok((direct - compact).abs() / direct.abs().max(1.0))
    }
}

/// Check the compact form at `theta`; a mismatch means the coefficients are
/// wrong and is reported as an error.
pub fn verify_reconstruction(
    form: &QuarticForm,
    csi: &StatisticalCsi,
    blocks: &FixedBlocks<'_>,
    theta_full: &crate::channel::PhaseShifts,
    tol: f64,
) -> Result<()> {
    let err = form.reconstruction_error(csi, blocks, theta_full)?;
    if err > tol {
        return Err(Error::Reconstruction(format!("compact f_q differs from direct evaluation by {err:e}")));
    }
    Ok(())
}

/// Riemannian gradient: tangent projection `∇ - Re{∇ ⊙ θ^*} ⊙ θ`.
pub fn riemannian_gradient(theta: &[Complex64], grad: &CVector) -> CVector {
    CVector::from_iterator(theta.len(), theta.iter().zip(grad.iter()).map(|(t, g)| g - t * (g * t.conj()).re))
}

/// One ascent-and-retract step; entries whose ascent point is zero keep
/// their previous value.
pub fn rga_step(theta: &[Complex64], grad_r: &CVector, rho: f64) -> Vec<Complex64> {
    theta
        .iter()
        .zip(grad_r.iter())
        .map(|(t, g)| {
            let v = t + g * rho;
            let r = v.norm();
            if r > 0.0 && r.is_finite() {
                v / r
            } else {
                *t
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgaOptions {
    pub t_max: usize,
    /// Backtracking factor in (0, 1).
    pub backtrack: f64,
    /// Relative objective tolerance.
    pub tol: f64,
    pub max_backtracks: usize,
}

impl Default for RgaOptions {
    fn default() -> Self {
        Self { t_max: 200, backtrack: 0.5, tol: 1e-9, max_backtracks: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgaOutcome {
    pub theta: Vec<Complex64>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Relative change fell below tolerance or the point is stationary.
    pub converged: bool,
    /// The line search could not find an ascent step.
    pub line_search_exhausted: bool,
}

/// Algorithm: projected gradient step with `ρ0 = 1/‖∇_R‖`, halved (by
/// `backtrack`) until the objective does not decrease.
pub fn rga_solve(form: &QuarticForm, theta0: &[Complex64], opts: &RgaOptions) -> Result<RgaOutcome> {
    if !(opts.backtrack > 0.0 && opts.backtrack < 1.0) {
        return Err(Error::InvalidConfig(format!("backtracking factor must lie in (0,1), got {}", opts.backtrack)));
    }
    let mut theta = theta0.to_vec();
    let mut value = form.evaluate(&theta);
    let mut trace = vec![value];
    if theta.is_empty() {
        return Ok(RgaOutcome { theta, trace, iterations: 0, converged: true, line_search_exhausted: false });
    }
    for t in 0..opts.t_max {
        let grad_r = riemannian_gradient(&theta, &form.gradient(&theta));
        let norm = grad_r.norm();
        let scale = form.gradient(&theta).norm().max(1e-300);
        if norm <= 1e-12 * scale || norm == 0.0 {
            return Ok(RgaOutcome { theta, trace, iterations: t, converged: true, line_search_exhausted: false });
        }
        let mut rho = 1.0 / norm;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand = rga_step(&theta, &grad_r, rho);
            let v = form.evaluate(&cand);
            if v >= value {
                accepted = Some((cand, v));
                break;
            }
            rho *= opts.backtrack;
        }
        let Some((cand, v)) = accepted else {
            return Ok(RgaOutcome { theta, trace, iterations: t, converged: true, line_search_exhausted: true });
        };
        let change = (v - value).abs() / value.abs().max(1.0);
        theta = cand;
        value = v;
        trace.push(value);
        if change < opts.tol {
            return Ok(RgaOutcome { theta, trace, iterations: t + 1, converged: true, line_search_exhausted: false });
        }
    }
    Ok(RgaOutcome { theta, trace, iterations: opts.t_max, converged: false, line_search_exhausted: false })
}
