//! Scenario definition: array sizes, link budgets, pilot setup, the
//! connected/reflecting split of the RDARS, and the long-term statistics
//! every closed-form expression is built from.
//!
//! All gains and powers are linear here (watts, linear path-loss gains).
//! Conversion from dB/dBm happens only in [`Deployment`], which describes a
//! scenario in natural units and realizes it for a seed.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

use crate::analytic_rate::{los_couplings, LosCouplings};
use crate::channel::{steering_vector, PhaseShifts};
use crate::error::{Error, Result};
use crate::linalg::{dotc, CVector};
use crate::rng;

/// Planar array of `rows x cols` elements; `cols` is the inner (y) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayShape {
    pub rows: usize,
    pub cols: usize,
}

impl ArrayShape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Factorization of `n` closest to square, with `rows <= cols`.
    pub fn near_square(n: usize) -> Self {
        if n == 0 {
            return Self::new(0, 0);
        }
        let mut rows = (n as f64).sqrt() as usize;
        while rows > 1 && !n.is_multiple_of(rows) {
            rows -= 1;
        }
        let rows = rows.max(1);
        Self::new(rows, n / rows)
    }
}

/// Per-user link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLink {
    /// Rician factor of the user-RDARS link.
    pub rician: f64,
    /// User-RDARS path-loss gain.
    pub gain_ur: f64,
    /// User-BS path-loss gain.
    pub gain_ub: f64,
    pub weight: f64,
}

/// Static system parameters, linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub bs_array: ArrayShape,
    pub rdars_array: ArrayShape,
    /// Number of connected-mode elements.
    pub connected: usize,
    /// Rician factor of the RDARS-BS link.
    pub rician_rb: f64,
    /// RDARS-BS path-loss gain.
    pub gain_rb: f64,
    pub users: Vec<UserLink>,
    pub noise_bs: f64,
    pub noise_rdars: f64,
    pub p_max: f64,
    pub pilot_power: f64,
    pub pilot_len: usize,
    pub coherence_len: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
}

impl SystemConfig {
    pub fn bs_antennas(&self) -> usize {
        self.bs_array.len()
    }

    pub fn elements(&self) -> usize {
        self.rdars_array.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.weight).collect()
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.element_spacing / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.users.is_empty() {
            return bad("at least one user is required".into());
        }
        if self.connected > self.elements() {
            return bad(format!("connected elements a={} exceed N={}", self.connected, self.elements()));
        }
        if self.pilot_len < self.num_users() {
            return bad(format!("pilot length {} shorter than user count {}", self.pilot_len, self.num_users()));
        }
        if self.pilot_len > self.coherence_len {
            return bad(format!("pilot length {} exceeds coherence length {}", self.pilot_len, self.coherence_len));
        }
        let scalars = [
            ("rician_rb", self.rician_rb),
            ("gain_rb", self.gain_rb),
            ("noise_bs", self.noise_bs),
            ("noise_rdars", self.noise_rdars),
            ("p_max", self.p_max),
            ("pilot_power", self.pilot_power),
        ];
        for (name, v) in scalars {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !(self.element_spacing > 0.0) || !(self.wavelength > 0.0) {
            return bad("element spacing and wavelength must be positive".into());
        }
        for (k, u) in self.users.iter().enumerate() {
            for (name, v) in [("rician", u.rician), ("gain_ur", u.gain_ur), ("gain_ub", u.gain_ub), ("weight", u.weight)] {
                if !(v >= 0.0) || !v.is_finite() {
                    return bad(format!("user {k}: {name} must be finite and nonnegative, got {v}"));
                }
            }
        }
        let wsum: f64 = self.users.iter().map(|u| u.weight).sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return bad(format!("weights must sum to 1, got {wsum}"));
        }
        Ok(())
    }
}

/// Connected (`A`) and reflecting (`Ã`) element sets, 0-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    elements: usize,
    connected: Vec<usize>,
    reflecting: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndicatorPolicy {
    /// The first `a` elements are connected.
    TopA,
    /// Explicit 0-based connected indices.
    Explicit(Vec<usize>),
}

/// Build the element-mode split for `n` elements with `a` connected.
pub fn build_indicator(n: usize, a: usize, policy: IndicatorPolicy) -> Result<IndicatorMatrix> {
    if a > n {
        return Err(Error::Domain(format!("a={a} exceeds N={n}")));
    }
    let mut connected = match policy {
        IndicatorPolicy::TopA => (0..a).collect::<Vec<_>>(),
        IndicatorPolicy::Explicit(list) => list,
    };
    connected.sort_unstable();
    connected.dedup();
    if connected.len() != a || connected.iter().any(|&i| i >= n) {
        return Err(Error::Domain(format!("explicit connected set must hold {a} distinct indices below {n}")));
    }
    let reflecting = (0..n).filter(|i| connected.binary_search(i).is_err()).collect();
    Ok(IndicatorMatrix { elements: n, connected, reflecting })
}

impl IndicatorMatrix {
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn connected(&self) -> &[usize] {
        &self.connected
    }

    pub fn reflecting(&self) -> &[usize] {
        &self.reflecting
    }

    pub fn num_connected(&self) -> usize {
        self.connected.len()
    }

    pub fn num_reflecting(&self) -> usize {
        self.reflecting.len()
    }

    pub fn is_connected(&self, n: usize) -> bool {
        self.connected.binary_search(&n).is_ok()
    }

    /// Diagonal of `I - A^H A` as 0/1 weights.
    pub fn reflect_mask(&self) -> Vec<f64> {
        (0..self.elements).map(|n| if self.is_connected(n) { 0.0 } else { 1.0 }).collect()
    }
}

/// Azimuth/elevation pair in radians, wrapped to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth: wrap_angle(azimuth), elevation: wrap_angle(elevation) }
    }
}

fn wrap_angle(x: f64) -> f64 {
    let tau = 2.0 * PI;
    let r = x % tau;
    if r < 0.0 {
        r + tau
    } else {
        r
    }
}

/// Node positions and the frozen arrival/departure angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_position: [f64; 3],
    pub rdars_position: [f64; 3],
    pub user_center: [f64; 3],
    pub user_radius: f64,
    pub user_positions: Vec<[f64; 3]>,
    /// Arrival at the BS from the RDARS.
    pub bs_arrival: Angles,
    /// Departure from the RDARS toward the BS.
    pub rdars_departure: Angles,
    /// Arrival at the RDARS from each user.
    pub user_arrivals: Vec<Angles>,
}

/// Log-distance path loss `C0 + 10·α·log10(d)` in dB, returned as a linear gain.
pub fn path_loss_linear(c0_db: f64, exponent: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    let pl_db = c0_db + 10.0 * exponent * distance.log10();
    Ok(10f64.powf(-pl_db / 10.0))
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Scenario description in natural units; [`Deployment::realize`] draws the
/// user drop and the angles for a seed and converts to [`SystemConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub bs_array: ArrayShape,
    pub rdars_array: ArrayShape,
    pub connected: usize,
    pub users: usize,
    pub bs_position: [f64; 3],
    pub rdars_position: [f64; 3],
    pub user_center: [f64; 3],
    pub user_radius: f64,
    pub c0_db: f64,
    pub exponent_ur: f64,
    pub exponent_rb: f64,
    pub exponent_ub: f64,
    pub rician_rb: f64,
    pub rician_ur: f64,
    pub p_max_dbm: f64,
    /// Pilot power; `None` means equal to `p_max`.
    pub pilot_power_dbm: Option<f64>,
    pub noise_bs_dbm: f64,
    pub noise_rdars_dbm: f64,
    pub pilot_len: usize,
    pub coherence_len: usize,
    pub spacing_over_wavelength: f64,
}

impl Default for Deployment {
    /// The reference setup: BS at (0,0,10), RDARS at (0,0,20), four users on
    /// a 10 m disc centred at (100,-20,1.5), 0 dBm power, -80 dBm noise.
    fn default() -> Self {
        Self {
            bs_array: ArrayShape::new(8, 16),
            rdars_array: ArrayShape::new(4, 8),
            connected: 2,
            users: 4,
            bs_position: [0.0, 0.0, 10.0],
            rdars_position: [0.0, 0.0, 20.0],
            user_center: [100.0, -20.0, 1.5],
            user_radius: 10.0,
            c0_db: 30.0,
            exponent_ur: 2.3,
            exponent_rb: 2.0,
            exponent_ub: 3.5,
            rician_rb: 10.0,
            rician_ur: 1.0,
            p_max_dbm: 0.0,
            pilot_power_dbm: None,
            noise_bs_dbm: -80.0,
            noise_rdars_dbm: -80.0,
            pilot_len: 8,
            coherence_len: 196,
            spacing_over_wavelength: 0.5,
        }
    }
}

/// A realized scenario: linear-unit configuration plus frozen geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: Geometry,
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl Deployment {
    /// Draw user positions (uniform in the disc) and all angles (uniform in
    /// `[0, 2π)`) from the geometry stream of `seed`.
    pub fn realize(&self, seed: u64) -> Result<Scenario> {
        let mut rng = rng::stream(seed, rng::GEOMETRY_STREAM);
        let mut user_positions = Vec::with_capacity(self.users);
        for _ in 0..self.users {
            let r = self.user_radius * rng::uniform(&mut rng).sqrt();
            let phi = 2.0 * PI * rng::uniform(&mut rng);
            user_positions.push([self.user_center[0] + r * phi.cos(), self.user_center[1] + r * phi.sin(), self.user_center[2]]);
        }
        let mut angle = || 2.0 * PI * rng::uniform(&mut rng);
        let bs_arrival = Angles::new(angle(), angle());
        let rdars_departure = Angles::new(angle(), angle());
        let user_arrivals = (0..self.users).map(|_| Angles::new(angle(), angle())).collect();

        let gain_rb = path_loss_linear(self.c0_db, self.exponent_rb, distance(&self.rdars_position, &self.bs_position))?;
        let mut links = Vec::with_capacity(self.users);
        for pos in &user_positions {
            let gain_ur = path_loss_linear(self.c0_db, self.exponent_ur, distance(pos, &self.rdars_position))?;
            let gain_ub = path_loss_linear(self.c0_db, self.exponent_ub, distance(pos, &self.bs_position))?;
            links.push(UserLink { rician: self.rician_ur, gain_ur, gain_ub, weight: 1.0 / gain_ub });
        }
        let wsum: f64 = links.iter().map(|u| u.weight).sum();
        for u in &mut links {
            u.weight /= wsum;
        }
        let p_max = dbm_to_watts(self.p_max_dbm);
        let config = SystemConfig {
            bs_array: self.bs_array,
            rdars_array: self.rdars_array,
            connected: self.connected,
            rician_rb: self.rician_rb,
            gain_rb,
            users: links,
            noise_bs: dbm_to_watts(self.noise_bs_dbm),
            noise_rdars: dbm_to_watts(self.noise_rdars_dbm),
            p_max,
            pilot_power: self.pilot_power_dbm.map(dbm_to_watts).unwrap_or(p_max),
            pilot_len: self.pilot_len,
            coherence_len: self.coherence_len,
            element_spacing: self.spacing_over_wavelength,
            wavelength: 1.0,
        };
        config.validate()?;
        let geometry = Geometry {
            bs_position: self.bs_position,
            rdars_position: self.rdars_position,
            user_center: self.user_center,
            user_radius: self.user_radius,
            user_positions,
            bs_arrival,
            rdars_departure,
            user_arrivals,
        };
        Ok(Scenario { config, geometry })
    }
}

/// Long-term constants of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserStats {
    /// Rician factor `ε_k`.
    pub rician: f64,
    /// Direct-link gain `γ_k`.
    pub gamma: f64,
    /// `β α_k / ((δ+1)(ε_k+1))`
    pub c: f64,
    /// `α_k / (ε_k+1)`
    pub d: f64,
    /// `(N-a) c_k δ`
    pub a1: f64,
    /// `(N-a) c_k (ε_k+1) + γ_k`
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    /// `σ_B² / (τ p_p)`
    pub pilot_noise_bs: f64,
    /// `σ_R² / (τ p_p)`
    pub pilot_noise_rdars: f64,
}

/// Statistical CSI: per-user constants, LoS vectors, and the θ-independent
/// LoS inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalCsi {
    pub users: Vec<UserStats>,
    pub indicator: IndicatorMatrix,
    pub bs_antennas: usize,
    pub elements: usize,
    /// Rician factor `δ` of the RDARS-BS link.
    pub rician_rb: f64,
    pub noise_bs: f64,
    pub noise_rdars: f64,
    /// `a_L(φ_RB)`
    pub bs_los: CVector,
    /// `a_N(ϕ_RB)`
    pub rdars_los: CVector,
    /// `h̄_k = a_N(φ_UR,k)`
    pub user_los: Vec<CVector>,
    /// `h̄_k^H h̄_i`
    pub los_gram: Vec<Vec<Complex64>>,
    /// `h̄_k^H (I - A^H A) h̄_i`
    pub los_gram_reflect: Vec<Vec<Complex64>>,
    /// Couplings at the all-ones phase vector.
    pub reference: LosCouplings,
}

impl StatisticalCsi {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_connected(&self) -> usize {
        self.indicator.num_connected()
    }

    pub fn num_reflecting(&self) -> usize {
        self.indicator.num_reflecting()
    }
}

/// Ratio `σ² / (τ p_p)`, infinite when no pilot energy is spent.
fn pilot_noise(noise: f64, tau: usize, pilot_power: f64) -> f64 {
    let energy = tau as f64 * pilot_power;
    if energy > 0.0 {
        noise / energy
    } else if noise > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Compute the LMMSE and rate constants for every user.
pub fn user_statistics(cfg: &SystemConfig, connected: usize) -> Vec<UserStats> {
    let l = cfg.bs_antennas() as f64;
    let reflecting = (cfg.elements() - connected) as f64;
    let delta = cfg.rician_rb;
    let sb = pilot_noise(cfg.noise_bs, cfg.pilot_len, cfg.pilot_power);
    let sr = pilot_noise(cfg.noise_rdars, cfg.pilot_len, cfg.pilot_power);
    cfg.users
        .iter()
        .map(|u| {
            let eps = u.rician;
            let c = cfg.gain_rb * u.gain_ur / ((delta + 1.0) * (eps + 1.0));
            let d = u.gain_ur / (eps + 1.0);
            let a1 = reflecting * c * delta;
            let a2 = reflecting * c * (eps + 1.0) + u.gain_ub;
            let (a3, a4) = if sb.is_infinite() || a2 + sb == 0.0 {
                (0.0, 0.0)
            } else {
                let a3 = a1 * sb / ((a2 + sb) * ((a2 + sb) + l * a1));
                (a3, a2 / (a2 + sb))
            };
            let a5 = if sr.is_infinite() || d + sr == 0.0 { 0.0 } else { d / (d + sr) };
            UserStats {
                rician: eps,
                gamma: u.gain_ub,
                c,
                d,
                a1,
                a2,
                a3,
                a4,
                a5,
                e1: a3 + a4,
                e2: l * a3 + a4,
                e3: l * a3 * a3 + 2.0 * a3 * a4 + a4 * a4,
                e4: a5,
                pilot_noise_bs: sb,
                pilot_noise_rdars: sr,
            }
        })
        .collect()
}

/// Derive every long-term constant for the given element split.
pub fn derive_statistics(cfg: &SystemConfig, geo: &Geometry, ind: &IndicatorMatrix) -> Result<StatisticalCsi> {
    cfg.validate()?;
    if ind.elements() != cfg.elements() || ind.num_connected() != cfg.connected {
        return Err(Error::Dimension(format!(
            "indicator ({} elements, {} connected) does not match config ({}, {})",
            ind.elements(),
            ind.num_connected(),
            cfg.elements(),
            cfg.connected
        )));
    }
    if geo.user_arrivals.len() != cfg.num_users() {
        return Err(Error::Dimension(format!("geometry has {} user angles for {} users", geo.user_arrivals.len(), cfg.num_users())));
    }
    let ratio = cfg.spacing_ratio();
    let bs_los = steering_vector(cfg.bs_array, geo.bs_arrival, ratio);
    let rdars_los = steering_vector(cfg.rdars_array, geo.rdars_departure, ratio);
    let user_los: Vec<CVector> = geo.user_arrivals.iter().map(|&ang| steering_vector(cfg.rdars_array, ang, ratio)).collect();
    let mask = ind.reflect_mask();
    let k = cfg.num_users();
    let mut los_gram = alloc::vec![alloc::vec![Complex64::new(0.0, 0.0); k]; k];
    let mut los_gram_reflect = los_gram.clone();
    for a in 0..k {
        for b in 0..k {
            los_gram[a][b] = dotc(user_los[a].as_slice(), user_los[b].as_slice());
            los_gram_reflect[a][b] = user_los[a].iter().zip(user_los[b].iter()).zip(&mask).map(|((x, y), m)| x.conj() * y * *m).sum();
        }
    }
    let mut csi = StatisticalCsi {
        users: user_statistics(cfg, ind.num_connected()),
        indicator: ind.clone(),
        bs_antennas: cfg.bs_antennas(),
        elements: cfg.elements(),
        rician_rb: cfg.rician_rb,
        noise_bs: cfg.noise_bs,
        noise_rdars: cfg.noise_rdars,
        bs_los,
        rdars_los,
        user_los,
        los_gram,
        los_gram_reflect,
        reference: LosCouplings::default(),
    };
    csi.reference = los_couplings(&csi, &PhaseShifts::ones(cfg.elements()))?;
    Ok(csi)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_config() -> SystemConfig {
        SystemConfig {
            bs_array: ArrayShape::new(2, 2),
            rdars_array: ArrayShape::new(2, 3),
            connected: 2,
            rician_rb: 10.0,
            gain_rb: 1e-3,
            users: alloc::vec![
                UserLink { rician: 1.0, gain_ur: 2e-3, gain_ub: 1e-4, weight: 0.5 },
                UserLink { rician: 2.0, gain_ur: 1e-3, gain_ub: 3e-4, weight: 0.5 },
            ],
            noise_bs: 1e-6,
            noise_rdars: 2e-6,
            p_max: 1e-3,
            pilot_power: 1e-3,
            pilot_len: 4,
            coherence_len: 100,
            element_spacing: 0.5,
            wavelength: 1.0,
        }
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_linear(30.0, 2.0, 10.0).unwrap() - 1e-5).abs() < 1e-18);
        assert!((path_loss_linear(30.0, 3.5, 100.0).unwrap() - 1e-10).abs() < 1e-23);
        assert!(path_loss_linear(30.0, 2.0, 0.0).is_err());
        assert!(path_loss_linear(30.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn default_exponents() {
        let d = Deployment::default();
        assert_eq!((d.c0_db, d.exponent_ur, d.exponent_rb, d.exponent_ub), (30.0, 2.3, 2.0, 3.5));
    }

    #[test]
    fn indicator_policies() {
        let top = build_indicator(32, 2, IndicatorPolicy::TopA).unwrap();
        assert_eq!(top.connected(), &[0, 1]);
        assert_eq!(top.num_reflecting(), 30);
        let ris = build_indicator(4, 0, IndicatorPolicy::TopA).unwrap();
        assert!(ris.connected().is_empty());
        assert_eq!(ris.reflecting(), &[0, 1, 2, 3]);
        let das = build_indicator(4, 4, IndicatorPolicy::TopA).unwrap();
        assert!(das.reflecting().is_empty());
        assert!(build_indicator(4, 5, IndicatorPolicy::TopA).is_err());
        let ex = build_indicator(5, 2, IndicatorPolicy::Explicit(alloc::vec![3, 1])).unwrap();
        assert_eq!(ex.connected(), &[1, 3]);
        assert_eq!(ex.reflecting(), &[0, 2, 4]);
        assert!(build_indicator(5, 2, IndicatorPolicy::Explicit(alloc::vec![1, 1])).is_err());
    }

    #[test]
    fn c_k_for_reference_rician_factors() {
        let mut cfg = small_config();
        cfg.users[0].rician = 1.0;
        let stats = user_statistics(&cfg, 2);
        let expected = cfg.gain_rb * cfg.users[0].gain_ur / 22.0;
        assert!((stats[0].c - expected).abs() < 1e-18);
        let n_minus_a = (cfg.elements() - 2) as f64;
        assert_eq!(stats[0].a1, n_minus_a * stats[0].c * cfg.rician_rb);
    }

    #[test]
    fn auxiliary_identities_and_bounds() {
        let cfg = small_config();
        let l = cfg.bs_antennas() as f64;
        for s in user_statistics(&cfg, 2) {
            assert!((s.e2 - (l * s.a3 + s.a4)).abs() < 1e-15);
            assert!((s.e3 - (l * s.a3 * s.a3 + 2.0 * s.a3 * s.a4 + s.a4 * s.a4)).abs() < 1e-15);
            for e in [s.e1, s.e2, s.e3, s.e4] {
                assert!((0.0..=1.0).contains(&e), "{s:?}");
            }
        }
    }

    #[test]
    fn pilot_energy_limits() {
        let mut cfg = small_config();
        let sigma = cfg.noise_bs.max(cfg.noise_rdars);
        cfg.pilot_power = 1e9 * sigma / cfg.pilot_len as f64;
        for s in user_statistics(&cfg, 2) {
            for e in [s.e1, s.e2, s.e3, s.e4] {
                assert!((1.0 - 1e-3..=1.0 + 1e-15).contains(&e), "{s:?}");
            }
        }
        cfg.pilot_power = 1e-9 * cfg.noise_bs.min(cfg.noise_rdars) / cfg.pilot_len as f64;
        for s in user_statistics(&cfg, 2) {
            for e in [s.e1, s.e2, s.e3, s.e4] {
                assert!(e <= 1e-3, "{s:?}");
            }
        }
        cfg.pilot_power = 0.0;
        for s in user_statistics(&cfg, 2) {
            assert_eq!([s.e1, s.e2, s.e3, s.e4], [0.0; 4]);
        }
    }

    #[test]
    fn near_square_shapes() {
        assert_eq!(ArrayShape::near_square(32), ArrayShape::new(4, 8));
        assert_eq!(ArrayShape::near_square(64), ArrayShape::new(8, 8));
        assert_eq!(ArrayShape::near_square(7), ArrayShape::new(1, 7));
        assert_eq!(ArrayShape::near_square(0).len(), 0);
    }

    #[test]
    fn realized_weights_follow_inverse_direct_gain() {
        let sc = Deployment::default().realize(3).unwrap();
        let cfg = &sc.config;
        let w: f64 = cfg.users.iter().map(|u| u.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
        let ratio = cfg.users[0].weight * cfg.users[0].gain_ub;
        for u in &cfg.users {
            assert!((u.weight * u.gain_ub - ratio).abs() < 1e-12 * ratio.abs().max(1e-300));
        }
        for ang in &sc.geometry.user_arrivals {
            assert!((0.0..2.0 * PI).contains(&ang.azimuth));
        }
        for p in &sc.geometry.user_positions {
            let r = ((p[0] - 100.0).powi(2) + (p[1] + 20.0).powi(2)).sqrt();
            assert!(r <= 10.0);
        }
        assert!((cfg.gain_rb - 1e-5).abs() < 1e-18);
    }
}
