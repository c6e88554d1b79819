//! Pilot training and the LMMSE estimate of the equivalent channel.
//!
//! The estimator gain is block diagonal: `E_k = a3 a_L a_L^H + a4 I` on the BS
//! block and `a5 I` on the connected-element block. It is applied through that
//! rank-one-plus-identity structure and never formed by inversion.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::los_couplings;
use crate::channel::PhaseShifts;
use crate::error::{Error, Result};
use crate::linalg::{dotc, CMatrix, CVector};
use crate::scenario::StatisticalCsi;

/// `tau x K` pilot matrix: the first `K` columns of the unitary `tau`-point DFT.
pub fn pilot_matrix(tau: usize, users: usize) -> Result<CMatrix> {
    if users > tau {
        return Err(Error::InvalidConfig(format!("{users} users need at least {users} pilot symbols, got {tau}")));
    }
    let norm = 1.0 / (tau as f64).sqrt();
    Ok(CMatrix::from_fn(tau, users, |t, k| Complex64::from_polar(norm, -2.0 * PI * (t * k) as f64 / tau as f64)))
}

/// Received pilot block `Y_p = sqrt(tau p_p) Q S^H + N`.
pub fn received_pilots(q: &CMatrix, pilots: &CMatrix, pilot_power: f64, noise: &CMatrix) -> Result<CMatrix> {
    let tau = pilots.nrows();
    if q.ncols() != pilots.ncols() || noise.shape() != (q.nrows(), tau) {
        return Err(Error::Dimension("pilot block dimensions disagree".into()));
    }
    let gain = Complex64::new((tau as f64 * pilot_power).sqrt(), 0.0);
    Ok(q * pilots.adjoint() * gain + noise)
}

/// Per-user observations `y_k = Y_p s_k / sqrt(tau p_p)`.
pub fn project_pilots(y_p: &CMatrix, pilots: &CMatrix, pilot_power: f64) -> Result<Vec<CVector>> {
    let tau = pilots.nrows();
    if y_p.ncols() != tau {
        return Err(Error::Dimension(format!("Y_p has {} columns, pilots span {tau}", y_p.ncols())));
    }
    let energy = tau as f64 * pilot_power;
    if !(energy > 0.0) {
        return Err(Error::Domain("pilot energy must be positive to project".into()));
    }
    let inv = Complex64::new(1.0 / energy.sqrt(), 0.0);
    Ok((0..pilots.ncols()).map(|k| y_p * pilots.column(k) * inv).collect())
}

/// Prior means of both blocks of `q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMean {
    /// `sqrt(c_k δ ε_k) f_k a_L`
    pub bs: CVector,
    /// `sqrt(d_k ε_k) A h̄_k`
    pub rdars: CVector,
}

impl PriorMean {
    pub fn stacked(&self) -> CVector {
        let (l, a) = (self.bs.len(), self.rdars.len());
        CVector::from_fn(l + a, |i, _| if i < l { self.bs[i] } else { self.rdars[i - l] })
    }
}

/// LMMSE estimator for every user at a fixed phase configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    bs_los: CVector,
    gains: Vec<(f64, f64, f64)>,
    means: Vec<PriorMean>,
}

/// Estimates `q̂_k` and, when the truth is supplied, the errors `q_k - q̂_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub q_hat: Vec<CVector>,
    pub error: Option<Vec<CVector>>,
}

pub fn prior_means(csi: &StatisticalCsi, theta: &PhaseShifts) -> Result<Vec<PriorMean>> {
    let couplings = los_couplings(csi, theta)?;
    Ok(csi
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let bs = &csi.bs_los * (couplings.f[k] * (u.c * csi.rician_rb * u.rician).sqrt());
            let s = (u.d * u.rician).sqrt();
            let rdars = CVector::from_iterator(csi.num_connected(), csi.indicator.connected().iter().map(|&n| csi.user_los[k][n] * s));
            PriorMean { bs, rdars }
        })
        .collect())
}

impl Estimator {
    pub fn new(csi: &StatisticalCsi, theta: &PhaseShifts) -> Result<Self> {
        Ok(Self {
            bs_los: csi.bs_los.clone(),
            gains: csi.users.iter().map(|u| (u.a3, u.a4, u.a5)).collect(),
            means: prior_means(csi, theta)?,
        })
    }

    pub fn mean(&self, k: usize) -> &PriorMean {
        &self.means[k]
    }

    /// `q̂_k = C_k y_k + D_k` for one user.
    pub fn estimate(&self, k: usize, y: &CVector) -> CVector {
        let (a3, a4, a5) = self.gains[k];
        let mean = &self.means[k];
        let l = self.bs_los.len();
        let a = mean.rdars.len();
        let mut out = CVector::zeros(l + a);
        // E_k (y_B - m_B) + m_B, with E_k = a3 a a^H + a4 I
        let centered = CVector::from_fn(l, |i, _| y[i] - mean.bs[i]);
        let proj = dotc(self.bs_los.as_slice(), centered.as_slice()) * a3;
        for i in 0..l {
            out[i] = mean.bs[i] + centered[i] * a4 + self.bs_los[i] * proj;
        }
        for r in 0..a {
            out[l + r] = mean.rdars[r] + (y[l + r] - mean.rdars[r]) * a5;
        }
        out
    }

    /// Estimate with no observation (zero pilot energy): the prior mean.
    pub fn prior(&self, k: usize) -> CVector {
        self.means[k].stacked()
    }

    /// Block-diagonal gain `C_k`, materialized for inspection and tests.
    pub fn gain_matrix(&self, k: usize) -> CMatrix {
        let (a3, a4, a5) = self.gains[k];
        let l = self.bs_los.len();
        let a = self.means[k].rdars.len();
        let mut c = CMatrix::zeros(l + a, l + a);
        for i in 0..l {
            for j in 0..l {
                c[(i, j)] = self.bs_los[i] * self.bs_los[j].conj() * a3;
            }
            c[(i, i)] += Complex64::new(a4, 0.0);
        }
        for r in 0..a {
            c[(l + r, l + r)] = Complex64::new(a5, 0.0);
        }
        c
    }
}

/// Estimate every user from projected observations.
pub fn lmmse_estimate(y: &[CVector], csi: &StatisticalCsi, theta: &PhaseShifts, truth: Option<&[CVector]>) -> Result<ChannelEstimate> {
    let est = Estimator::new(csi, theta)?;
    if y.len() != csi.num_users() {
        return Err(Error::Dimension(format!("{} observations for {} users", y.len(), csi.num_users())));
    }
    let dim = csi.bs_antennas + csi.num_connected();
    if y.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension(format!("observations must have length {dim}")));
    }
    let q_hat: Vec<CVector> = y.iter().enumerate().map(|(k, v)| est.estimate(k, v)).collect();
    let error = truth.map(|q| q.iter().zip(&q_hat).map(|(a, b)| a - b).collect());
    Ok(ChannelEstimate { q_hat, error })
}

/// Closed-form first and second moments of `q_k` and `y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMoments {
    pub mean: CVector,
    pub cov_qy: CMatrix,
    pub cov_yy: CMatrix,
}

/// Mean, `C[q_k, y_k]` and `C[y_k, y_k]` for user `k`.
pub fn pilot_moments(csi: &StatisticalCsi, theta: &PhaseShifts, k: usize) -> Result<PilotMoments> {
    if k >= csi.num_users() {
        return Err(Error::Dimension(format!("user {k} out of range")));
    }
    let means = prior_means(csi, theta)?;
    let u = &csi.users[k];
    let l = csi.bs_antennas;
    let a = csi.num_connected();
    let mut cov = CMatrix::zeros(l + a, l + a);
    for i in 0..l {
        for j in 0..l {
            cov[(i, j)] = csi.bs_los[i] * csi.bs_los[j].conj() * u.a1;
        }
        cov[(i, i)] += Complex64::new(u.a2, 0.0);
    }
    for r in 0..a {
        cov[(l + r, l + r)] = Complex64::new(u.d, 0.0);
    }
    let mut cov_yy = cov.clone();
    for i in 0..l {
        cov_yy[(i, i)] += Complex64::new(u.pilot_noise_bs, 0.0);
    }
    for r in 0..a {
        cov_yy[(l + r, l + r)] += Complex64::new(u.pilot_noise_rdars, 0.0);
    }
    Ok(PilotMoments { mean: means[k].stacked(), cov_qy: cov, cov_yy })
}
