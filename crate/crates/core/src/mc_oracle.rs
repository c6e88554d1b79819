//! Brute-force Monte Carlo estimates of every expectation in the SINR:
//! channels, pilots, LMMSE estimation and MRC are simulated draw by draw.
//!
//! A draw is a pure function of `(seed, draw index)` (see [`crate::rng`]), so
//! draws may be produced in any order or in parallel. [`summarize`] reduces a
//! slice of draws in index order and is therefore reproducible bit for bit.
//!
//! Standard errors use the influence-function (delta) method on the per-draw
//! samples; the leak term is the `n/(n-1)`-corrected sample variance of
//! `q̂_k^H q_k`, and the signal term subtracts the `var/n` plug-in bias.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::RateBreakdown;
use crate::channel::{assemble_equivalent, sample_channels, PhaseShifts};
use crate::error::{Error, Result};
use crate::estimation::{pilot_matrix, Estimator};
use crate::linalg::{dotc, CMatrix, CVector, CompensatedSum};
use crate::rng::{self, complex_normal};
use crate::scenario::{StatisticalCsi, SystemConfig};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// `r = Q̂^H y`.
pub fn mrc_combine(q_hat: &CMatrix, y: &CVector) -> Result<CVector> {
    if q_hat.nrows() != y.len() {
        return Err(Error::Dimension(format!("Q̂ has {} rows, y has {}", q_hat.nrows(), y.len())));
    }
    Ok(q_hat.adjoint() * y)
}

/// Everything needed to produce draws for one `(config, θ)` point.
#[derive(Debug, Clone)]
pub struct McContext<'a> {
    cfg: &'a SystemConfig,
    csi: &'a StatisticalCsi,
    theta: PhaseShifts,
    estimator: Estimator,
    pilots: CMatrix,
    /// `1 / sqrt(τ p_p)`, zero when no pilot energy is spent.
    projection: f64,
}

impl<'a> McContext<'a> {
    pub fn new(cfg: &'a SystemConfig, csi: &'a StatisticalCsi, theta: &PhaseShifts) -> Result<Self> {
        let energy = cfg.pilot_len as f64 * cfg.pilot_power;
        Ok(Self {
            cfg,
            csi,
            theta: theta.clone(),
            estimator: Estimator::new(csi, theta)?,
            pilots: pilot_matrix(cfg.pilot_len, cfg.num_users())?,
            projection: if energy > 0.0 { 1.0 / energy.sqrt() } else { 0.0 },
        })
    }

    pub fn num_users(&self) -> usize {
        self.csi.num_users()
    }

    /// Simulate draw `draw` of stream family `seed`.
    pub fn draw(&self, seed: u64, draw: u64) -> Result<DrawSample> {
        let mut rng = rng::stream(seed, draw);
        let real = sample_channels(self.csi, self.cfg, &mut rng);
        let eq = assemble_equivalent(&real, &self.csi.indicator, &self.theta)?;
        let l = self.csi.bs_antennas;
        let dim = l + self.csi.num_connected();
        let k_users = self.num_users();

        let q_hat: Vec<CVector> = if self.projection > 0.0 {
            let tau = self.pilots.nrows();
            let sb = self.cfg.noise_bs.sqrt();
            let sr = self.cfg.noise_rdars.sqrt();
            let noise = CMatrix::from_fn(dim, tau, |r, _| complex_normal(&mut rng) * if r < l { sb } else { sr });
            (0..k_users)
                .map(|k| {
                    let y = &eq.q[k] + (&noise * self.pilots.column(k)) * Complex64::new(self.projection, 0.0);
                    self.estimator.estimate(k, &y)
                })
                .collect()
        } else {
            (0..k_users).map(|k| self.estimator.prior(k)).collect()
        };

        let mut own = Vec::with_capacity(k_users);
        let mut cross = vec![vec![0.0; k_users]; k_users];
        let mut noise_form = Vec::with_capacity(k_users);
        for k in 0..k_users {
            own.push(dotc(q_hat[k].as_slice(), eq.q[k].as_slice()));
            for i in 0..k_users {
                if i != k {
                    cross[k][i] = dotc(q_hat[k].as_slice(), eq.q[i].as_slice()).norm_sqr();
                }
            }
            let bs: f64 = q_hat[k].iter().take(l).map(|z| z.norm_sqr()).sum();
            let rd: f64 = q_hat[k].iter().skip(l).map(|z| z.norm_sqr()).sum();
            noise_form.push(self.cfg.noise_bs * bs + self.cfg.noise_rdars * rd);
        }
        Ok(DrawSample { own, cross, noise: noise_form })
    }
}

/// Per-draw quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawSample {
    /// `q̂_k^H q_k`
    pub own: Vec<Complex64>,
    /// `|q̂_k^H q_i|^2`, zero on the diagonal.
    pub cross: Vec<Vec<f64>>,
    /// `q̂_k^H blk(σ_B² I, σ_R² I) q̂_k`
    pub noise: Vec<f64>,
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermEstimate {
    pub mean: f64,
    /// Sample variance of the per-draw influence values.
    pub variance: f64,
    pub draws: usize,
    pub std_error: f64,
}

impl TermEstimate {
    fn from_influence(mean: f64, influence: &[f64]) -> Self {
        let n = influence.len();
        let mut acc = CompensatedSum::new();
        for x in influence {
            acc.add(x * x);
        }
        let variance = acc.value() / (n as f64 - 1.0);
        Self { mean, variance, draws: n, std_error: (variance / n as f64).sqrt() }
    }

    /// 99% normal confidence interval.
    pub fn ci99(&self) -> (f64, f64) {
        (self.mean - Z99 * self.std_error, self.mean + Z99 * self.std_error)
    }

    /// `(value - mean) / s.e.`; zero when both agree exactly with no spread.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = value - self.mean;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 * value.abs().max(self.mean.abs()) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Monte Carlo counterparts of the closed-form terms, plus SINR and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub signal: Vec<TermEstimate>,
    pub leak: Vec<TermEstimate>,
    pub noise: Vec<TermEstimate>,
    /// `interference[k][i]`; `None` on the diagonal.
    pub interference: Vec<Vec<Option<TermEstimate>>>,
    pub sinr: Vec<TermEstimate>,
    pub draws: usize,
}

impl McEstimate {
    /// Point estimates arranged like the analytic breakdown.
    pub fn as_breakdown(&self) -> RateBreakdown {
        RateBreakdown {
            signal: self.signal.iter().map(|t| t.mean).collect(),
            leak: self.leak.iter().map(|t| t.mean).collect(),
            noise: self.noise.iter().map(|t| t.mean).collect(),
            interference: self.interference.iter().map(|row| row.iter().map(|t| t.map_or(0.0, |t| t.mean)).collect()).collect(),
        }
    }
}

fn mean_of(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value() / n as f64
}

/// Reduce draws (in slice order) to estimates; SINRs use powers `p`.
pub fn summarize(samples: &[DrawSample], p: &[f64]) -> Result<McEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Domain("at least two draws are required".into()));
    }
    let k_users = samples[0].own.len();
    if p.len() != k_users {
        return Err(Error::Dimension(format!("{} powers for {k_users} users", p.len())));
    }
    let nf = n as f64;
    let mut signal = Vec::with_capacity(k_users);
    let mut leak = Vec::with_capacity(k_users);
    let mut noise = Vec::with_capacity(k_users);
    let mut interference = vec![vec![None; k_users]; k_users];
    let mut sinr = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mu = Complex64::new(mean_of(samples.iter().map(|s| s.own[k].re), n), mean_of(samples.iter().map(|s| s.own[k].im), n));
        let dev: Vec<f64> = samples.iter().map(|s| (s.own[k] - mu).norm_sqr()).collect();
        let var = mean_of(dev.iter().copied(), n) * nf / (nf - 1.0);
        let infl_s: Vec<f64> = samples.iter().map(|s| 2.0 * (mu.conj() * (s.own[k] - mu)).re).collect();
        let infl_v: Vec<f64> = dev.iter().map(|d| d - var).collect();
        let sig = TermEstimate::from_influence(mu.norm_sqr() - var / nf, &infl_s);
        let lk = TermEstimate::from_influence(var, &infl_v);
        let zbar = mean_of(samples.iter().map(|s| s.noise[k]), n);
        let infl_z: Vec<f64> = samples.iter().map(|s| s.noise[k] - zbar).collect();
        let nz = TermEstimate::from_influence(zbar, &infl_z);

        let mut infl_den: Vec<f64> = infl_v.iter().zip(&infl_z).map(|(v, z)| p[k] * v + z).collect();
        let mut den = p[k] * lk.mean + nz.mean;
        for i in (0..k_users).filter(|&i| i != k) {
            let tbar = mean_of(samples.iter().map(|s| s.cross[k][i]), n);
            let infl: Vec<f64> = samples.iter().map(|s| s.cross[k][i] - tbar).collect();
            for (d, x) in infl_den.iter_mut().zip(&infl) {
                *d += p[i] * x;
            }
            den += p[i] * tbar;
            interference[k][i] = Some(TermEstimate::from_influence(tbar, &infl));
        }
        let num = p[k] * sig.mean;
        let (value, infl_sinr): (f64, Vec<f64>) = if num == 0.0 || den == 0.0 {
            (0.0, vec![0.0; n])
        } else {
            let r = num / den;
            (r, infl_s.iter().zip(&infl_den).map(|(s, d)| (p[k] * s - r * d) / den).collect())
        };
        sinr.push(TermEstimate::from_influence(value, &infl_sinr));
        signal.push(sig);
        leak.push(lk);
        noise.push(nz);
    }
    Ok(McEstimate { signal, leak, noise, interference, sinr, draws: n })
}

/// Serial Monte Carlo estimate over draws `0..draws` of stream family `seed`.
pub fn estimate_sinr_terms(
    cfg: &SystemConfig,
    csi: &StatisticalCsi,
    theta: &PhaseShifts,
    p: &[f64],
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    let ctx = McContext::new(cfg, csi, theta)?;
    let samples = (0..draws as u64).map(|d| ctx.draw(seed, d)).collect::<Result<Vec<_>>>()?;
    summarize(&samples, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrc_identity_noiseless() {
        let q = CMatrix::identity(3, 3);
        let x = CVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 3.0)]);
        let r = mrc_combine(&q, &(&q * &x)).unwrap();
        assert!((r - x).norm() < 1e-15);
    }

    #[test]
    fn mrc_single_user_gain() {
        let q = CVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)]);
        let x = Complex64::new(0.5, -0.25);
        let r = mrc_combine(&CMatrix::from_column_slice(2, 1, q.as_slice()), &(&q * x)).unwrap();
        assert!((r[0] - x * q.norm_squared()).norm() < 1e-14);
        assert!(mrc_combine(&CMatrix::zeros(3, 1), &q).is_err());
    }

    #[test]
    fn influence_standard_error() {
        let t = TermEstimate::from_influence(1.0, &[1.0, -1.0, 1.0, -1.0]);
        assert!((t.variance - 4.0 / 3.0).abs() < 1e-15);
        assert!((t.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let (lo, hi) = t.ci99();
        assert!(lo < 1.0 && hi > 1.0);
    }
}
