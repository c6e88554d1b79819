//! Experiment orchestration: baselines, convergence traces, sweeps and the
//! closed-form vs Monte Carlo regression.
//!
//! Every run is a pure function of `(deployment, seed, baseline, options)`;
//! work is spread over rayon but results are collected in a fixed order, so
//! the output does not depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use rdars_core::analytic_rate::{rate, rate_breakdown, sinr_all};
use rdars_core::fp_bcd::{bcd_solve, default_state, BcdOptions, OptimizerState, PhaseSolver};
use rdars_core::regression::random_case;
use rdars_core::scenario::{build_indicator, derive_statistics, ArrayShape, Deployment, IndicatorPolicy, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::config::{OptimizerSection, SolverChoice, ValidateSection};
use crate::error::{SimError, SimResult};
use crate::mc::estimate_sinr_terms_par;
use crate::output::{join, ResultRow, ValidateRow};

/// Compared schemes; labels follow the kebab-case names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Powers and phases, configured phase solver.
    RdarsJoint,
    /// Phases by RGA at full power.
    RdarsRga,
    /// Phases by MM at full power.
    RdarsMm,
    /// All-ones phases at full power.
    RdarsFixed,
    RisJoint,
    RisRga,
    RisMm,
    RisFixed,
    /// Only the `a` connected elements (`N = a`), powers optimized.
    DasPower,
    /// BS antennas only, powers optimized.
    NoRdarsPower,
}

impl Baseline {
    pub const ALL: [Baseline; 10] = [
        Baseline::RdarsJoint,
        Baseline::RdarsRga,
        Baseline::RdarsMm,
        Baseline::RdarsFixed,
        Baseline::RisJoint,
        Baseline::RisRga,
        Baseline::RisMm,
        Baseline::RisFixed,
        Baseline::DasPower,
        Baseline::NoRdarsPower,
    ];

    /// The convergence experiment runs every scheme.
    pub const CONVERGENCE: [Baseline; 10] = Self::ALL;

    pub fn label(self) -> &'static str {
        match self {
            Baseline::RdarsJoint => "rdars-joint",
            Baseline::RdarsRga => "rdars-rga",
            Baseline::RdarsMm => "rdars-mm",
            Baseline::RdarsFixed => "rdars-fixed",
            Baseline::RisJoint => "ris-joint",
            Baseline::RisRga => "ris-rga",
            Baseline::RisMm => "ris-mm",
            Baseline::RisFixed => "ris-fixed",
            Baseline::DasPower => "das-power",
            Baseline::NoRdarsPower => "no-rdars-power",
        }
    }

    /// Panel shape and number of connected elements used by this scheme.
    pub fn layout(self, dep: &Deployment) -> (ArrayShape, usize) {
        match self {
            Baseline::RdarsJoint | Baseline::RdarsRga | Baseline::RdarsMm | Baseline::RdarsFixed => (dep.rdars_array, dep.connected),
            Baseline::RisJoint | Baseline::RisRga | Baseline::RisMm | Baseline::RisFixed => (dep.rdars_array, 0),
            Baseline::DasPower => (das_shape(dep.connected, dep.rdars_array.cols), dep.connected),
            Baseline::NoRdarsPower => (ArrayShape::new(0, 0), 0),
        }
    }

    pub fn options(self, opt: &OptimizerSection) -> BcdOptions {
        let base = opt.bcd();
        let (solver, optimize_power) = match self {
            Baseline::RdarsJoint | Baseline::RisJoint => (base.phase_solver, true),
            Baseline::RdarsRga | Baseline::RisRga => (opt.solver(SolverChoice::Rga), false),
            Baseline::RdarsMm | Baseline::RisMm => (opt.solver(SolverChoice::Mm), false),
            Baseline::RdarsFixed | Baseline::RisFixed => (PhaseSolver::None, false),
            Baseline::DasPower | Baseline::NoRdarsPower => (PhaseSolver::None, true),
        };
        BcdOptions { phase_solver: solver, optimize_power, ..base }
    }
}

/// Panel of the DAS baseline: the `a` connected elements keep the panel's
/// row layout when possible.
pub fn das_shape(a: usize, cols: usize) -> ArrayShape {
    if a == 0 {
        ArrayShape::new(0, 0)
    } else if a <= cols {
        ArrayShape::new(1, a)
    } else if cols > 0 && a.is_multiple_of(cols) {
        ArrayShape::new(a / cols, cols)
    } else {
        ArrayShape::near_square(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Number of BS antennas `L`.
    L,
    /// Maximum transmit power in dBm.
    P,
    /// Number of RDARS elements `N`.
    N,
}

impl SweepKind {
    pub fn experiment(self) -> &'static str {
        match self {
            SweepKind::L => "sweep-l",
            SweepKind::P => "sweep-p",
            SweepKind::N => "sweep-n",
        }
    }

    /// Deployment at grid value `v`.
    pub fn apply(self, dep: &Deployment, v: f64) -> SimResult<Deployment> {
        let count = || {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(SimError::Config(format!("grid value {v} is not a positive integer")))
            }
        };
        let mut d = dep.clone();
        match self {
            SweepKind::L => d.bs_array = ArrayShape::near_square(count()?),
            SweepKind::P => d.p_max_dbm = v,
            SweepKind::N => {
                let n = count()?;
                if dep.connected > n {
                    return Err(SimError::Config(format!("N = {n} is below a = {}", dep.connected)));
                }
                d.rdars_array = ArrayShape::near_square(n);
            }
        }
        Ok(d)
    }
}

/// Result of one optimizer run.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub config: SystemConfig,
    pub options: BcdOptions,
    pub state: OptimizerState,
    pub wall_time: f64,
}

impl BaselineRun {
    /// Per-user rates at trace point `t`.
    pub fn rates(&self, t: usize) -> Vec<f64> {
        let (tau, tau_c) = (self.config.pilot_len, self.config.coherence_len);
        self.state.sinr_trace[t].iter().map(|&s| rate(s, tau, tau_c, self.options.prelog, self.options.log_base)).collect()
    }

    pub fn final_wsr(&self) -> f64 {
        *self.state.wsr_trace.last().expect("trace holds the initial point")
    }
}

/// Optimize one baseline on the scenario drawn from `seed`.
pub fn run_baseline(dep: &Deployment, seed: u64, baseline: Baseline, opt: &OptimizerSection) -> SimResult<BaselineRun> {
    let (shape, a) = baseline.layout(dep);
    let d = Deployment { rdars_array: shape, connected: a, ..dep.clone() };
    let scenario = d.realize(seed)?;
    let cfg = scenario.config;
    let ind = build_indicator(shape.len(), a, IndicatorPolicy::TopA)?;
    let csi = derive_statistics(&cfg, &scenario.geometry, &ind)?;
    let options = baseline.options(opt);
    let start = Instant::now();
    let state = bcd_solve(&cfg, &csi, default_state(&cfg, &csi)?, &options)?;
    Ok(BaselineRun { config: cfg, options, state, wall_time: start.elapsed().as_secs_f64() })
}

fn row(experiment: &str, baseline: Baseline, param: f64, seed: u64, run: &BaselineRun, t: Option<usize>, timing: bool) -> ResultRow {
    let last = run.state.objective_trace.len() - 1;
    let at = t.unwrap_or(last);
    ResultRow {
        experiment: experiment.to_string(),
        baseline: baseline.label().to_string(),
        param,
        seed,
        iteration: t.map_or(-1, |t| t as i64),
        objective: Some(run.state.objective_trace[at]),
        wsr: Some(run.state.wsr_trace[at]),
        rates: join(&run.rates(at)),
        powers: join(&run.state.power_trace[at]),
        sinrs: join(&run.state.sinr_trace[at]),
        status: "ok".to_string(),
        wall_time: (timing && t.is_none()).then_some(run.wall_time),
    }
}

fn failed_row(experiment: &str, baseline: Baseline, param: f64, seed: u64, err: &SimError) -> ResultRow {
    log::warn!("{experiment} {} at {param} (seed {seed}) failed: {err}", baseline.label());
    ResultRow {
        experiment: experiment.to_string(),
        baseline: baseline.label().to_string(),
        param,
        seed,
        iteration: -1,
        objective: None,
        wsr: None,
        rates: String::new(),
        powers: String::new(),
        sinrs: String::new(),
        status: format!("error: {err}"),
        wall_time: None,
    }
}

/// Per-iteration traces (iteration 0 is the initial point) followed by one
/// final row per baseline; `param` is the seed's `p_max` in dBm.
pub fn run_convergence(dep: &Deployment, seed: u64, baselines: &[Baseline], opt: &OptimizerSection, timing: bool) -> Vec<ResultRow> {
    let runs: Vec<_> = baselines.par_iter().map(|&b| (b, run_baseline(dep, seed, b, opt))).collect();
    let mut rows = Vec::new();
    for (b, run) in runs {
        match run {
            Ok(run) => {
                for t in 0..run.state.objective_trace.len() {
                    rows.push(row("converge", b, dep.p_max_dbm, seed, &run, Some(t), timing));
                }
                rows.push(row("converge", b, dep.p_max_dbm, seed, &run, None, timing));
            }
            Err(e) => rows.push(failed_row("converge", b, dep.p_max_dbm, seed, &e)),
        }
    }
    rows
}

/// Final rows for every `(grid value, baseline, seed)`, in that order.
pub fn run_sweep(
    dep: &Deployment,
    kind: SweepKind,
    grid: &[f64],
    seeds: &[u64],
    baselines: &[Baseline],
    opt: &OptimizerSection,
    timing: bool,
) -> SimResult<Vec<ResultRow>> {
    let points = grid.iter().map(|&v| kind.apply(dep, v).map(|d| (v, d))).collect::<SimResult<Vec<_>>>()?;
    let tasks: Vec<(f64, &Deployment, Baseline, u64)> =
        points.iter().flat_map(|(v, d)| baselines.iter().flat_map(move |&b| seeds.iter().map(move |&s| (*v, d, b, s)))).collect();
    let exp = kind.experiment();
    Ok(tasks
        .par_iter()
        .map(|&(v, d, b, s)| match run_baseline(d, s, b, opt) {
            Ok(run) => row(exp, b, v, s, &run, None, timing),
            Err(e) => failed_row(exp, b, v, s, &e),
        })
        .collect())
}

/// Mean final weighted sum rate over seeds at each grid value; `None` when
/// any run of that point failed.
pub fn mean_curve(rows: &[ResultRow], baseline: Baseline) -> Vec<(f64, Option<f64>)> {
    let mut out: Vec<(f64, Vec<Option<f64>>)> = Vec::new();
    for r in rows.iter().filter(|r| r.baseline == baseline.label() && r.iteration == -1) {
        match out.last_mut() {
            Some((v, xs)) if *v == r.param => xs.push(r.wsr),
            _ => out.push((r.param, vec![r.wsr])),
        }
    }
    out.into_iter()
        .map(|(v, xs)| {
            let n = xs.len() as f64;
            (v, xs.into_iter().sum::<Option<f64>>().map(|s| s / n))
        })
        .collect()
}

/// First grid value where a curve reaches `level`, linearly interpolated.
pub fn crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if curve.first()?.1 >= level {
        return Some(curve[0].0);
    }
    curve.windows(2).find(|w| w[0].1 < level && w[1].1 >= level).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    })
}

/// Deliberate corruption of the analytic side, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corruption {
    None,
    /// Scale the RDARS-BS path gain seen by the closed form.
    RdarsGain(f64),
}

#[derive(Debug, Clone)]
pub struct ValidateReport {
    pub rows: Vec<ValidateRow>,
    pub threshold: f64,
}

impl ValidateReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !(r.z.abs() <= self.threshold)).count()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

/// Compare every closed-form term and SINR with the Monte Carlo estimate on
/// the regression cases `seed, seed + 1, ...`.
pub fn run_validate(seed: u64, section: &ValidateSection, corruption: Corruption) -> SimResult<ValidateReport> {
    let mut rows = Vec::new();
    for c in 0..section.configs {
        let case_seed = seed.wrapping_add(c as u64);
        let case = random_case(case_seed)?;
        let analytic_csi = match corruption {
            Corruption::None => case.csi.clone(),
            Corruption::RdarsGain(f) => {
                let cfg = SystemConfig { gain_rb: case.cfg.gain_rb * f, ..case.cfg.clone() };
                derive_statistics(&cfg, &case.geo, &case.ind)?
            }
        };
        let bd = rate_breakdown(&analytic_csi, &case.theta)?;
        let sinr = sinr_all(&case.p, &bd)?;
        let mc = estimate_sinr_terms_par(&case.cfg, &case.csi, &case.theta, &case.p, section.draws, case_seed)?;
        let dims = (case.cfg.bs_antennas(), case.cfg.elements(), case.cfg.connected, case.cfg.num_users());
        let mut push = |term: &'static str, user: usize, other: Option<usize>, analytic: f64, est: &rdars_core::mc_oracle::TermEstimate| {
            rows.push(ValidateRow {
                config: c,
                seed: case_seed,
                l: dims.0,
                n: dims.1,
                a: dims.2,
                k: dims.3,
                term,
                user,
                other: other.map_or(-1, |i| i as i64),
                analytic,
                mc_mean: est.mean,
                std_error: est.std_error,
                z: est.z_score(analytic),
            });
        };
        for k in 0..dims.3 {
            push("signal", k, None, bd.signal[k], &mc.signal[k]);
            push("leak", k, None, bd.leak[k], &mc.leak[k]);
            push("noise", k, None, bd.noise[k], &mc.noise[k]);
            for i in (0..dims.3).filter(|&i| i != k) {
                let est = mc.interference[k][i].as_ref().expect("off-diagonal estimate");
                push("interference", k, Some(i), bd.interference[k][i], est);
            }
            push("sinr", k, None, sinr[k], &mc.sinr[k]);
        }
        log::info!("validate config {c} (seed {case_seed}, L={} N={} a={} K={}) done", dims.0, dims.1, dims.2, dims.3);
    }
    Ok(ValidateReport { rows, threshold: section.z_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn das_shapes() {
        assert_eq!(das_shape(0, 8), ArrayShape::new(0, 0));
        assert_eq!(das_shape(2, 8), ArrayShape::new(1, 2));
        assert_eq!(das_shape(16, 8), ArrayShape::new(2, 8));
        assert_eq!(das_shape(9, 8), ArrayShape::new(3, 3));
    }

    #[test]
    fn crossing_interpolates() {
        let c = [(0.0, 0.1), (2.0, 0.3), (4.0, 0.5)];
        assert!((crossing(&c, 0.2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(crossing(&c, 0.05), Some(0.0));
        assert_eq!(crossing(&c, 0.6), None);
    }

    #[test]
    fn sweep_applies_grid_value() {
        let d = Deployment::default();
        assert_eq!(SweepKind::L.apply(&d, 64.0).unwrap().bs_array, ArrayShape::new(8, 8));
        assert_eq!(SweepKind::N.apply(&d, 16.0).unwrap().rdars_array, ArrayShape::new(4, 4));
        assert_eq!(SweepKind::P.apply(&d, -3.0).unwrap().p_max_dbm, -3.0);
        assert!(SweepKind::N.apply(&d, 1.0).is_err());
        assert!(SweepKind::L.apply(&d, 2.5).is_err());
    }
}
