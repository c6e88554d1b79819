//! TOML experiment files.
//!
//! Every section and field is optional; missing values fall back to the
//! reference deployment. Powers are in dBm, path-loss constants in dB and
//! positions in meters.
//!
//! ```toml
//! seed = 7
//!
//! [scenario]
//! bs_rows = 8
//! bs_cols = 16
//! rdars_rows = 4
//! rdars_cols = 8
//! connected = 2
//! p_max_dbm = 0.0
//!
//! [optimizer]
//! phase_solver = "rga"     # rga | mm | none
//! prelog = "coherence"     # coherence | pilot-ratio
//!
//! [sweep]
//! kind = "l"               # l | p | n
//! grid = [16, 32, 64, 128, 256]
//! seeds = [0, 1, 2, 3, 4]
//! ```

use std::path::Path;

use rdars_core::analytic_rate::PrelogMode;
use rdars_core::fp_bcd::{BcdOptions, PhaseSolver};
use rdars_core::phase_mm::MmOptions;
use rdars_core::phase_rga::RgaOptions;
use rdars_core::scenario::{ArrayShape, Deployment};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::experiments::{Baseline, SweepKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub rdars_rows: usize,
    pub rdars_cols: usize,
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
    /// Defaults to `p_max_dbm`.
    pub pilot_power_dbm: Option<f64>,
    pub noise_bs_dbm: f64,
    pub noise_rdars_dbm: f64,
    pub pilot_len: usize,
    pub coherence_len: usize,
    pub spacing_over_wavelength: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self::from(&Deployment::default())
    }
}

impl From<&Deployment> for ScenarioSection {
    fn from(d: &Deployment) -> Self {
        Self {
            bs_rows: d.bs_array.rows,
            bs_cols: d.bs_array.cols,
            rdars_rows: d.rdars_array.rows,
            rdars_cols: d.rdars_array.cols,
            connected: d.connected,
            users: d.users,
            bs_position: d.bs_position,
            rdars_position: d.rdars_position,
            user_center: d.user_center,
            user_radius: d.user_radius,
            c0_db: d.c0_db,
            exponent_ur: d.exponent_ur,
            exponent_rb: d.exponent_rb,
            exponent_ub: d.exponent_ub,
            rician_rb: d.rician_rb,
            rician_ur: d.rician_ur,
            p_max_dbm: d.p_max_dbm,
            pilot_power_dbm: d.pilot_power_dbm,
            noise_bs_dbm: d.noise_bs_dbm,
            noise_rdars_dbm: d.noise_rdars_dbm,
            pilot_len: d.pilot_len,
            coherence_len: d.coherence_len,
            spacing_over_wavelength: d.spacing_over_wavelength,
        }
    }
}

impl ScenarioSection {
    pub fn deployment(&self) -> Deployment {
        Deployment {
            bs_array: ArrayShape::new(self.bs_rows, self.bs_cols),
            rdars_array: ArrayShape::new(self.rdars_rows, self.rdars_cols),
            connected: self.connected,
            users: self.users,
            bs_position: self.bs_position,
            rdars_position: self.rdars_position,
            user_center: self.user_center,
            user_radius: self.user_radius,
            c0_db: self.c0_db,
            exponent_ur: self.exponent_ur,
            exponent_rb: self.exponent_rb,
            exponent_ub: self.exponent_ub,
            rician_rb: self.rician_rb,
            rician_ur: self.rician_ur,
            p_max_dbm: self.p_max_dbm,
            pilot_power_dbm: self.pilot_power_dbm,
            noise_bs_dbm: self.noise_bs_dbm,
            noise_rdars_dbm: self.noise_rdars_dbm,
            pilot_len: self.pilot_len,
            coherence_len: self.coherence_len,
            spacing_over_wavelength: self.spacing_over_wavelength,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Rga,
    Mm,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PrelogChoice {
    Coherence,
    PilotRatio,
}

impl From<PrelogChoice> for PrelogMode {
    fn from(p: PrelogChoice) -> Self {
        match p {
            PrelogChoice::Coherence => PrelogMode::Coherence,
            PrelogChoice::PilotRatio => PrelogMode::PilotRatio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    /// Phase solver of the "joint" baselines.
    pub phase_solver: SolverChoice,
    pub max_iter: usize,
    pub tol: f64,
    pub prelog: PrelogChoice,
    pub rga_max_iter: usize,
    pub mm_max_iter: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let b = BcdOptions::default();
        Self {
            phase_solver: SolverChoice::Rga,
            max_iter: b.max_iter,
            tol: b.tol,
            prelog: PrelogChoice::Coherence,
            rga_max_iter: RgaOptions::default().t_max,
            mm_max_iter: MmOptions::default().t_max,
        }
    }
}

impl OptimizerSection {
    pub fn solver(&self, choice: SolverChoice) -> PhaseSolver {
        match choice {
            SolverChoice::Rga => PhaseSolver::Rga(RgaOptions { t_max: self.rga_max_iter, ..RgaOptions::default() }),
            SolverChoice::Mm => PhaseSolver::Mm(MmOptions { t_max: self.mm_max_iter, ..MmOptions::default() }),
            SolverChoice::None => PhaseSolver::None,
        }
    }

    pub fn bcd(&self) -> BcdOptions {
        BcdOptions {
            phase_solver: self.solver(self.phase_solver),
            max_iter: self.max_iter,
            tol: self.tol,
            prelog: self.prelog.into(),
            ..BcdOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Number of random regression configurations.
    pub configs: usize,
    pub draws: usize,
    /// Largest accepted `|z|`.
    pub z_threshold: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { configs: 20, draws: 100_000, z_threshold: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub baselines: Vec<Baseline>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kind: SweepKind::L,
            grid: vec![16.0, 32.0, 64.0, 128.0, 256.0],
            seeds: vec![0, 1, 2, 3, 4],
            baselines: vec![Baseline::RdarsJoint, Baseline::RisJoint, Baseline::DasPower, Baseline::NoRdarsPower],
        }
    }
}

impl SweepSection {
    pub fn validate(&self) -> SimResult<()> {
        if self.grid.is_empty() || self.seeds.is_empty() || self.baselines.is_empty() {
            return Err(SimError::Config("sweep grid, seeds and baselines must be nonempty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SimError::Config("sweep grid must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub baselines: Vec<Baseline>,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self { baselines: Baseline::CONVERGENCE.to_vec() }
    }
}

/// A whole experiment file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFile {
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub optimizer: OptimizerSection,
    pub validate: ValidateSection,
    pub sweep: SweepSection,
    pub converge: ConvergeSection,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> SimResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_setup() {
        let f = ExperimentFile::parse("").unwrap();
        assert_eq!(f.scenario.deployment(), Deployment::default());
        assert_eq!(f.optimizer.bcd(), BcdOptions::default());
    }

    #[test]
    fn partial_sections_override() {
        let f = ExperimentFile::parse("seed = 3\n[scenario]\nconnected = 1\np_max_dbm = -4.0\n[sweep]\nkind = \"p\"\ngrid = [-4.0, 0.0]\n")
            .unwrap();
        assert_eq!(f.seed, 3);
        assert_eq!(f.scenario.connected, 1);
        assert_eq!(f.scenario.deployment().p_max_dbm, -4.0);
        assert_eq!(f.sweep.kind, SweepKind::P);
        assert!(ExperimentFile::parse("[scenario]\nbogus = 1\n").is_err());
    }

    #[test]
    fn sweep_grid_must_increase() {
        let s = SweepSection { grid: vec![1.0, 1.0], ..SweepSection::default() };
        assert!(s.validate().is_err());
        assert!(SweepSection::default().validate().is_ok());
    }
}
