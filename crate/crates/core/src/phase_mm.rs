//! Phase design by two-tier majorization-minimization.
//!
//! On the `M` reflecting entries, with `z = θ ⊗ θ^*` (so `z_{m+nM} = θ_n θ_m^*`)
//! and `ω_{ki}` chosen so that `ω_{ki}^H z = f_k^* f_i`, the minimization
//! objective `g0 = -f_q` reads
//!
//! ```text
//! g0(θ) = θ̃^H J2 θ̃ - 2 Re{θ^H K4 θ} - const,   θ̃ = [θ; z],
//! J2 = blk(-K3, -Ĵ1),   Ĵ1 = Σ α_{ki} ω_{ki} ω_{ki}^H,   K̃ = K3 + K4 + K4^H.
//! ```
//!
//! `K4` collects the non-Hermitian pieces of `K̃` (the `s1 s2` cross term of
//! the signal power and the LoS interference couplings); `K3` is the rest.
//! The first tier bounds `θ̃^H J2 θ̃` with `λ1 ≥ λmax(J2)`, which leaves
//! `2 Re{θ^H ũ} + θ^H V̄ θ`; the second tier bounds `θ^H V̄ θ` with
//! `λ2 ≥ λmax(V̄)`, leaving `2 Re{θ^H f_t}`, minimized entrywise on the circle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dense_lambda_max, lambda_max, CMatrix, CVector, CompensatedSum, HermitianOperator};
use crate::phase_rga::QuarticForm;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Closed-form minimizer of `2 Re{θ^H f}` over unit-modulus `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MmUpdate {
    /// `θ_i = -f_i / |f_i|`, the exact minimizer.
    #[default]
    Opposite,
    /// `θ_i = exp(-j arg f_i)`, the rule as printed in the original algorithm.
    ConjugatePhase,
}

/// Eigenvalue bound used by the second tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondTierBound {
    /// `λmax(V̄_t)`, recomputed every iteration.
    #[default]
    VBar,
    /// `λmax(J2)`, as printed in the original update.
    J2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub t_max: usize,
    /// Relative objective tolerance.
    pub tol: f64,
    pub update: MmUpdate,
    pub second_tier: SecondTierBound,
    /// Power-iteration residual tolerance, relative to the operator norm bound.
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    /// Added to every eigenvalue estimate, relative to the norm bound, so the
    /// surrogates remain upper bounds despite iteration error.
    pub eig_margin: f64,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self {
            t_max: 1000,
            tol: 1e-9,
            update: MmUpdate::default(),
            second_tier: SecondTierBound::default(),
            eig_tol: 1e-10,
            eig_max_iter: 20_000,
            eig_margin: 1e-9,
        }
    }
}

/// `-Ĵ1 = Σ (-α_{ki}) ω_{ki} ω_{ki}^H` on `M²` dimensions, applied without
/// materialization. `ω_{ki}` has entries `b_k[m] b_i[n]^*` at `m + nM`.
#[derive(Debug, Clone)]
pub struct NegJ1<'a> {
    alpha: &'a [Vec<f64>],
    b: &'a [CVector],
    m: usize,
}

impl<'a> NegJ1<'a> {
    pub fn new(form: &'a QuarticForm) -> Self {
        Self { alpha: &form.alpha, b: &form.b, m: form.dim() }
    }

    /// `ω_{ki}^H x`
    fn project(&self, k: usize, i: usize, x: &[Complex64]) -> Complex64 {
        let (bk, bi) = (&self.b[k], &self.b[i]);
        let mut acc = ZERO;
        for n in 0..self.m {
            let mut col = ZERO;
            for mm in 0..self.m {
                col += bk[mm].conj() * x[mm + n * self.m];
            }
            acc += col * bi[n];
        }
        acc
    }

    /// `Σ (-α) (x^H ω)(ω^H y)`, the bilinear form of `-Ĵ1`.
    pub fn bilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (k, row) in self.alpha.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                if *a != 0.0 {
                    acc += self.project(k, i, x).conj() * self.project(k, i, y) * -a;
                }
            }
        }
        acc
    }
}

impl HermitianOperator for NegJ1<'_> {
    fn dim(&self) -> usize {
        self.m * self.m
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (k, row) in self.alpha.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let c = self.project(k, i, x) * -a;
                let (bk, bi) = (&self.b[k], &self.b[i]);
                for n in 0..self.m {
                    let bn = bi[n].conj() * c;
                    for mm in 0..self.m {
                        out[mm + n * self.m] += bk[mm] * bn;
                    }
                }
            }
        }
    }

    /// The trace, since the operator is positive semidefinite.
    fn norm_bound(&self) -> f64 {
        let mut acc = 0.0;
        for (k, row) in self.alpha.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                acc += -a * self.b[k].norm_squared() * self.b[i].norm_squared();
            }
        }
        acc
    }

    /// Nonzero spectrum from the `K² x K²` Gram matrix `D^{1/2} Ω^H Ω D^{1/2}`.
    fn exact_lambda_max(&self) -> Option<f64> {
        let pairs: Vec<(usize, usize, f64)> = self
            .alpha
            .iter()
            .enumerate()
            .flat_map(|(k, row)| row.iter().enumerate().map(move |(i, a)| (k, i, (-a).max(0.0).sqrt())))
            .collect();
        let gram = CMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
            let (k, i, sr) = pairs[r];
            let (k2, i2, sc) = pairs[c];
            // ω_{ki}^H ω_{k2 i2} = (b_k^H b_k2)(b_i2^H b_i)
            self.b[k].dotc(&self.b[k2]) * self.b[i2].dotc(&self.b[i]) * (sr * sc)
        });
        Some(dense_lambda_max(&gram))
    }
}

/// The MM view of a [`QuarticForm`] with the θ-independent bound `λ1`.
#[derive(Debug, Clone)]
pub struct MmForm {
    pub form: QuarticForm,
    pub k3: CMatrix,
    pub k4: CMatrix,
    /// `λmax(-K3)` and `λmax(-Ĵ1)` before the safety margin.
    pub lambda_k3: f64,
    pub lambda_j1: f64,
    /// `λ1 ≥ λmax(J2)`, margin included.
    pub lambda1: f64,
}

/// Quantities of one surrogate construction at `θ_t`.
#[derive(Debug, Clone)]
pub struct SurrogateState {
    pub theta_t: Vec<Complex64>,
    /// `ũ = (-K3 - λ1) θ_t`
    pub u: CVector,
    /// `V̂`, the un-vectorized `(-Ĵ1 - λ1) z_t`.
    pub v_hat: CMatrix,
    /// `Ṽ = V̂ - K4^T`
    pub v_tilde: CMatrix,
    /// `V̄ = Ṽ^* + Ṽ^T`, Hermitian.
    pub v_bar: CMatrix,
    /// Second-tier bound (either `λmax(V̄)` or `λ1`, margin included).
    pub lambda2: f64,
    /// `f_t = (V̄ - λ2) θ_t + ũ`
    pub f: CVector,
    /// `g1 = 2 Re{θ^H ũ} + θ^H V̄ θ + c1`
    pub c1: f64,
    /// `g2 = 2 Re{θ^H f_t} + c2`
    pub c2: f64,
}

fn kron_conj(theta: &[Complex64]) -> Vec<Complex64> {
    let m = theta.len();
    let mut z = vec![ZERO; m * m];
    for n in 0..m {
        for mm in 0..m {
            z[mm + n * m] = theta[n] * theta[mm].conj();
        }
    }
    z
}

fn quad(m: &CMatrix, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    // x^H M y
    let mut acc = ZERO;
    for (r, xr) in x.iter().enumerate() {
        let mut row = ZERO;
        for (c, yc) in y.iter().enumerate() {
            row += m[(r, c)] * yc;
        }
        acc += xr.conj() * row;
    }
    acc
}

impl MmForm {
    pub fn build(form: &QuarticForm, opts: &MmOptions) -> Result<Self> {
        if form.alpha.iter().flatten().any(|a| *a > 0.0) {
            return Err(Error::Solver("quartic coefficients must be nonpositive".into()));
        }
        let m = form.dim();
        let mut k4 = CMatrix::zeros(m, m);
        let mut k3 = CMatrix::zeros(m, m);
        for k in 0..form.num_users() {
            let ck = form.c_matrix(k);
            // the s1·s2 cross term of the signal power, -χ² p s1 s2 |f_k|²
            let cross = form.signal_cross[k];
            k4 += &ck * Complex64::new(cross, 0.0);
            k3 += ck * Complex64::new(form.beta[k] - 2.0 * cross, 0.0);
            for i in (0..form.num_users()).filter(|&i| i != k) {
                k4 += form.d_matrix(k, i) * form.xi[k][i];
            }
        }
        let neg_k3 = -k3.clone();
        let e3 = lambda_max(&neg_k3, opts.eig_tol, opts.eig_max_iter);
        let j1 = NegJ1::new(form);
        let e1 = lambda_max(&j1, opts.eig_tol, opts.eig_max_iter);
        let margin = opts.eig_margin * (neg_k3.norm_bound() + j1.norm_bound());
        let lambda1 = e3.value.max(e1.value) + margin;
        Ok(Self { form: form.clone(), k3, k4, lambda_k3: e3.value, lambda_j1: e1.value, lambda1 })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// `-f_q`
    pub fn g0(&self, theta: &[Complex64]) -> f64 {
        -self.form.evaluate(theta)
    }

    /// `θ̃^H J2 θ̃ - 2 Re{θ^H K4 θ} - const` from the MM matrices with an
    /// explicit `z`; equals [`Self::g0`] on the manifold.
    pub fn g0_compact(&self, theta: &[Complex64]) -> f64 {
        let z = kron_conj(theta);
        let mut acc = CompensatedSum::new();
        acc.add(self.j2_bilinear(theta, &z, theta, &z).re);
        acc.add(-2.0 * quad(&self.k4, theta, theta).re);
        acc.add(-self.form.constant);
        acc.value()
    }

    /// `x̃^H J2 ỹ` for `x̃ = [x1; x2]`, `ỹ = [y1; y2]`.
    pub fn j2_bilinear(&self, x1: &[Complex64], x2: &[Complex64], y1: &[Complex64], y2: &[Complex64]) -> Complex64 {
        -quad(&self.k3, x1, y1) + NegJ1::new(&self.form).bilinear(x2, y2)
    }

    /// Build `ũ`, `V̂`, `V̄`, `λ2` and `f_t` at `θ_t`.
    pub fn surrogate(&self, theta_t: &[Complex64], opts: &MmOptions) -> SurrogateState {
        let m = self.dim();
        let lambda1 = self.lambda1;
        let t = CVector::from_column_slice(theta_t);
        let u = -(&self.k3 * &t) - &t * Complex64::new(lambda1, 0.0);
        let f = self.form.couplings(theta_t);
        // V̂ = Σ (-α) (f_k^* f_i) b_k b_i^H - λ1 θ_t^* θ_t^T
        let mut v_hat = CMatrix::from_fn(m, m, |r, c| -theta_t[r].conj() * theta_t[c] * lambda1);
        for (k, row) in self.form.alpha.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let coef = f[k].conj() * f[i] * -a;
                let (bk, bi) = (&self.form.b[k], &self.form.b[i]);
                for c in 0..m {
                    let col = bi[c].conj() * coef;
                    for r in 0..m {
                        v_hat[(r, c)] += bk[r] * col;
                    }
                }
            }
        }
        let v_tilde = &v_hat - self.k4.transpose();
        let v_bar = v_tilde.conjugate() + v_tilde.transpose();
        let lambda2 = match opts.second_tier {
            SecondTierBound::VBar => {
                let e = lambda_max(&v_bar, opts.eig_tol, opts.eig_max_iter);
                e.value + opts.eig_margin * v_bar.norm_bound()
            }
            SecondTierBound::J2 => lambda1,
        };
        let fvec = &v_bar * &t - &t * Complex64::new(lambda2, 0.0) + &u;
        let mf = m as f64;
        let z_t = kron_conj(theta_t);
        let j2_tt = self.j2_bilinear(theta_t, &z_t, theta_t, &z_t).re;
        let c1 = 2.0 * lambda1 * (mf + mf * mf) - j2_tt - self.form.constant;
        let c2 = c1 + 2.0 * lambda2 * mf - quad(&v_bar, theta_t, theta_t).re;
        SurrogateState { theta_t: theta_t.to_vec(), u, v_hat, v_tilde, v_bar, lambda2, f: fvec, c1, c2 }
    }

    /// First-tier surrogate evaluated from its definition,
    /// `2 Re{θ̃^H (J2 - λ1) θ̃_t} + 2 λ1 (M + M²) - θ̃_t^H J2 θ̃_t - 2 Re{θ^H K4 θ} - const`.
    pub fn g1(&self, theta: &[Complex64], s: &SurrogateState) -> f64 {
        let mf = self.dim() as f64;
        let (z, z_t) = (kron_conj(theta), kron_conj(&s.theta_t));
        let cross = self.j2_bilinear(theta, &z, &s.theta_t, &z_t).re
            - self.lambda1 * (crate::linalg::dotc(theta, &s.theta_t).re + crate::linalg::dotc(&z, &z_t).re);
        let own = self.j2_bilinear(&s.theta_t, &z_t, &s.theta_t, &z_t).re;
        2.0 * cross + 2.0 * self.lambda1 * (mf + mf * mf) - own - 2.0 * quad(&self.k4, theta, theta).re - self.form.constant
    }

    /// First-tier surrogate in the reduced form `2 Re{θ^H ũ} + θ^H V̄ θ + c1`.
    pub fn g1_reduced(&self, theta: &[Complex64], s: &SurrogateState) -> f64 {
        2.0 * crate::linalg::dotc(theta, s.u.as_slice()).re + quad(&s.v_bar, theta, theta).re + s.c1
    }

    /// Second-tier surrogate `2 Re{θ^H f_t} + c2`.
    pub fn g2(&self, theta: &[Complex64], s: &SurrogateState) -> f64 {
        2.0 * crate::linalg::dotc(theta, s.f.as_slice()).re + s.c2
    }
}

/// Unit-modulus minimizer of `2 Re{θ^H f}`; zero entries keep `fallback`.
pub fn circle_minimizer(f: &[Complex64], fallback: &[Complex64], rule: MmUpdate) -> Vec<Complex64> {
    f.iter()
        .zip(fallback)
        .map(|(x, t)| {
            let r = x.norm();
            if !(r > 0.0 && r.is_finite()) {
                return *t;
            }
            match rule {
                MmUpdate::Opposite => -x / r,
                MmUpdate::ConjugatePhase => x.conj() / r,
            }
        })
        .collect()
}

/// One MM step from `θ_t`.
pub fn mm_iterate(mm: &MmForm, theta_t: &[Complex64], opts: &MmOptions) -> (Vec<Complex64>, SurrogateState) {
    let s = mm.surrogate(theta_t, opts);
    (circle_minimizer(s.f.as_slice(), theta_t, opts.update), s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmOutcome {
    pub theta: Vec<Complex64>,
    /// `f_q` at the start and after every iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `f_q` never decreased beyond rounding.
    pub monotone: bool,
}

/// Repeat [`mm_iterate`] until the relative change of `f_q` falls below
/// `tol` or `t_max` iterations have run.
pub fn mm_solve(mm: &MmForm, theta0: &[Complex64], opts: &MmOptions) -> Result<MmOutcome> {
    if theta0.len() != mm.dim() {
        return Err(Error::Dimension(format!("{} phases for a {}-element form", theta0.len(), mm.dim())));
    }
    let mut theta = theta0.to_vec();
    let mut value = mm.form.evaluate(&theta);
    let mut trace = vec![value];
    let mut monotone = true;
    if theta.is_empty() {
        return Ok(MmOutcome { theta, trace, iterations: 0, converged: true, monotone });
    }
    for t in 0..opts.t_max {
        let (next, _) = mm_iterate(mm, &theta, opts);
        let v = mm.form.evaluate(&next);
        if !v.is_finite() {
            return Err(Error::Solver(format!("MM objective became {v}")));
        }
        if v < value - 1e-12 * value.abs().max(1.0) {
            monotone = false;
        }
        let change = (v - value).abs() / value.abs().max(1.0);
        theta = next;
        value = v;
        trace.push(value);
        if change < opts.tol {
            return Ok(MmOutcome { theta, trace, iterations: t + 1, converged: true, monotone });
        }
    }
    Ok(MmOutcome { theta, trace, iterations: opts.t_max, converged: false, monotone })
}
