//! Steering vectors, channel draws, and the equivalent channel seen by the
//! BS antennas plus the connected RDARS elements.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::rng::complex_normal;
use crate::scenario::{Angles, ArrayShape, IndicatorMatrix, StatisticalCsi, SystemConfig};

/// UPA response. Entry `x` (0-based) has phase
/// `2π (d/λ) (⌊x / cols⌋ sin ψa sin ψe + (x mod cols) cos ψe)`.
pub fn steering_vector(shape: ArrayShape, angles: Angles, spacing_ratio: f64) -> CVector {
    let (sa, se, ce) = (angles.azimuth.sin(), angles.elevation.sin(), angles.elevation.cos());
    let cols = shape.cols.max(1);
    CVector::from_iterator(
        shape.len(),
        (0..shape.len()).map(|x| {
            let row = (x / cols) as f64;
            let col = (x % cols) as f64;
            Complex64::from_polar(1.0, 2.0 * PI * spacing_ratio * (row * sa * se + col * ce))
        }),
    )
}

/// RDARS phase vector. Entries at connected indices are inert and kept at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts {
    theta: CVector,
}

impl PhaseShifts {
    pub fn ones(n: usize) -> Self {
        Self { theta: CVector::from_element(n, Complex64::new(1.0, 0.0)) }
    }

    /// Phases in radians; connected entries are reset to 1.
    pub fn from_angles(angles: &[f64], ind: &IndicatorMatrix) -> Result<Self> {
        let v: Vec<Complex64> = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        Self::from_values(&v, ind)
    }

    /// Unit-modulus values; connected entries are reset to 1.
    pub fn from_values(values: &[Complex64], ind: &IndicatorMatrix) -> Result<Self> {
        if values.len() != ind.elements() {
            return Err(Error::Dimension(format!("{} phases for {} elements", values.len(), ind.elements())));
        }
        let mut theta = CVector::from_column_slice(values);
        for &n in ind.connected() {
            theta[n] = Complex64::new(1.0, 0.0);
        }
        for &n in ind.reflecting() {
            if (theta[n].norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("phase {n} has modulus {}", theta[n].norm())));
            }
        }
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.theta
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.theta.as_slice()
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.theta[n]
    }

    /// Phases of the reflecting entries, in indicator order.
    pub fn reflecting(&self, ind: &IndicatorMatrix) -> Vec<Complex64> {
        ind.reflecting().iter().map(|&n| self.theta[n]).collect()
    }

    /// Overwrite the reflecting entries, in indicator order.
    pub fn set_reflecting(&mut self, ind: &IndicatorMatrix, values: &[Complex64]) {
        for (&n, v) in ind.reflecting().iter().zip(values) {
            self.theta[n] = *v;
        }
    }
}

/// One draw of all small-scale channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// RDARS-BS channel, `L x N`.
    pub h_rb: CMatrix,
    /// User-RDARS channels, length `N` each.
    pub h_ur: Vec<CVector>,
    /// User-BS channels, length `L` each.
    pub h_ub: Vec<CVector>,
}

/// Draw `H`, `h_k`, `d_k` with the Rician/Rayleigh models around the LoS
/// components cached in `csi`.
pub fn sample_channels<R: RngCore>(csi: &StatisticalCsi, cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let (l, n) = (csi.bs_antennas, csi.elements);
    let delta = cfg.rician_rb;
    let scale = (cfg.gain_rb / (delta + 1.0)).sqrt();
    let los = scale * delta.sqrt();
    // column-major fill
    let mut h_rb = CMatrix::zeros(l, n);
    for j in 0..n {
        let an = csi.rdars_los[j].conj();
        for i in 0..l {
            h_rb[(i, j)] = csi.bs_los[i] * an * los + complex_normal(rng) * scale;
        }
    }
    let mut h_ur = Vec::with_capacity(csi.num_users());
    let mut h_ub = Vec::with_capacity(csi.num_users());
    for (k, link) in cfg.users.iter().enumerate() {
        let s = (link.gain_ur / (link.rician + 1.0)).sqrt();
        let los = s * link.rician.sqrt();
        let bar = &csi.user_los[k];
        h_ur.push(CVector::from_iterator(n, (0..n).map(|i| bar[i] * los + complex_normal(rng) * s)));
        let g = link.gain_ub.sqrt();
        h_ub.push(CVector::from_iterator(l, (0..l).map(|_| complex_normal(rng) * g)));
    }
    ChannelRealization { h_rb, h_ur, h_ub }
}

/// Per-user equivalent channels `q_k = [H B h_k + d_k; A h_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    pub bs_antennas: usize,
    pub q: Vec<CVector>,
}

impl EquivalentChannel {
    pub fn user(&self, k: usize) -> &CVector {
        &self.q[k]
    }

    /// `(L + a) x K` matrix with the users as columns.
    pub fn matrix(&self) -> CMatrix {
        let rows = self.q.first().map_or(self.bs_antennas, |q| q.len());
        CMatrix::from_fn(rows, self.q.len(), |r, c| self.q[c][r])
    }
}

pub fn assemble_equivalent(real: &ChannelRealization, ind: &IndicatorMatrix, theta: &PhaseShifts) -> Result<EquivalentChannel> {
    let (l, n) = real.h_rb.shape();
    if n != ind.elements() || theta.len() != n {
        return Err(Error::Dimension(format!("H has {n} columns, indicator {} elements, theta {} entries", ind.elements(), theta.len())));
    }
    if real.h_ur.len() != real.h_ub.len() {
        return Err(Error::Dimension("user channel lists differ in length".into()));
    }
    let a = ind.num_connected();
    let mut q = Vec::with_capacity(real.h_ur.len());
    for (h, d) in real.h_ur.iter().zip(&real.h_ub) {
        if h.len() != n || d.len() != l {
            return Err(Error::Dimension("user channel length mismatch".into()));
        }
        let mut v = CVector::zeros(l + a);
        for i in 0..l {
            v[i] = d[i];
        }
        for &m in ind.reflecting() {
            let g = theta.get(m) * h[m];
            for i in 0..l {
                v[i] += real.h_rb[(i, m)] * g;
            }
        }
        for (r, &m) in ind.connected().iter().enumerate() {
            v[l + r] = h[m];
        }
        q.push(v);
    }
    Ok(EquivalentChannel { bs_antennas: l, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::scenario::build_indicator;
    use crate::scenario::IndicatorPolicy;

    fn cplx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(ArrayShape::new(2, 2), Angles::new(PI / 2.0, PI / 2.0), 0.5);
        let expected = [cplx(1.0, 0.0), cplx(1.0, 0.0), cplx(-1.0, 0.0), cplx(-1.0, 0.0)];
        for (x, e) in v.iter().zip(expected) {
            assert!((x - e).norm() < 1e-12, "{v:?}");
        }
        let flat = steering_vector(ArrayShape::new(3, 5), Angles::new(0.0, PI / 2.0), 0.5);
        assert!(flat.iter().all(|z| (z - cplx(1.0, 0.0)).norm() < 1e-12));
        let any = steering_vector(ArrayShape::new(4, 4), Angles::new(1.1, 2.3), 0.5);
        assert_eq!(any[0], cplx(1.0, 0.0));
        assert!(any.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn assembly_special_cases() {
        let mut r = rng::stream(1, 0);
        let (l, n) = (3, 4);
        let real = ChannelRealization {
            h_rb: CMatrix::from_fn(l, n, |_, _| complex_normal(&mut r)),
            h_ur: (0..2).map(|_| CVector::from_fn(n, |_, _| complex_normal(&mut r))).collect(),
            h_ub: (0..2).map(|_| CVector::from_fn(l, |_, _| complex_normal(&mut r))).collect(),
        };
        let das = build_indicator(n, n, IndicatorPolicy::TopA).unwrap();
        let q = assemble_equivalent(&real, &das, &PhaseShifts::ones(n)).unwrap();
        for k in 0..2 {
            assert_eq!(q.user(k).rows(0, l), real.h_ub[k].rows(0, l));
            assert_eq!(q.user(k).rows(l, n), real.h_ur[k].rows(0, n));
        }
        let ris = build_indicator(n, 0, IndicatorPolicy::TopA).unwrap();
        let angles = [0.3, 1.2, -2.0, 0.7];
        let theta = PhaseShifts::from_angles(&angles, &ris).unwrap();
        let q = assemble_equivalent(&real, &ris, &theta).unwrap();
        let diag = CMatrix::from_diagonal(theta.as_vector());
        for k in 0..2 {
            let expect = &real.h_rb * &diag * &real.h_ur[k] + &real.h_ub[k];
            assert!((q.user(k) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn connected_phases_are_pinned() {
        let ind = build_indicator(3, 1, IndicatorPolicy::TopA).unwrap();
        let p = PhaseShifts::from_angles(&[1.0, 2.0, 3.0], &ind).unwrap();
        assert_eq!(p.get(0), cplx(1.0, 0.0));
        assert!(PhaseShifts::from_values(&[cplx(1.0, 0.0), cplx(2.0, 0.0), cplx(1.0, 0.0)], &ind).is_err());
    }
}
