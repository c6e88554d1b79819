//! Gradient, compact forms, majorization chain and BCD behaviour on the
//! regression cases.

mod common;

use num_complex::Complex64;
use rdars_core::analytic_rate::{rate_breakdown, sinr_all};
use rdars_core::channel::PhaseShifts;
use rdars_core::fp_bcd::{
    bcd_solve, default_state, eval_f_q, initial_state, update_chi, weighted_log_rate, BcdOptions, FixedBlocks, PhaseSolver,
};
use rdars_core::linalg::{lambda_max, CMatrix, EigenMethod};
use rdars_core::phase_mm::{mm_solve, MmForm, MmOptions, MmUpdate, SecondTierBound};
use rdars_core::phase_rga::{rga_solve, PhaseCoefficients, QuarticForm, RgaOptions};
use rdars_core::regression::Case;
use rdars_core::rng::{self, StreamRng};
use rdars_core::scenario::{build_indicator, derive_statistics, ArrayShape, Deployment, IndicatorPolicy};

fn random_phases(r: &mut StreamRng, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::from_polar(1.0, common::unif(r, 0.0, std::f64::consts::TAU))).collect()
}

/// Duals drawn at random so the form is generic, not only at the FP optimum.
struct Point {
    case: Case,
    weights: Vec<f64>,
    eta: Vec<f64>,
    chi: Vec<f64>,
}

impl Point {
    fn new(seed: u64) -> Self {
        let case = common::random_case(seed);
        let mut r = rng::stream(seed, 17);
        let k = case.cfg.num_users();
        let weights = case.cfg.weights();
        let eta = (0..k).map(|_| common::unif(&mut r, 0.0, 3.0)).collect();
        let chi = (0..k).map(|_| common::unif(&mut r, 0.05, 1.0)).collect();
        Self { case, weights, eta, chi }
    }

    fn blocks(&self) -> FixedBlocks<'_> {
        FixedBlocks { weights: &self.weights, p: &self.case.p, eta: &self.eta, chi: &self.chi }
    }

    fn form(&self) -> QuarticForm {
        QuarticForm::build(&PhaseCoefficients::extract(&self.case.csi), &self.blocks())
    }

    fn full(&self, reflecting: &[Complex64]) -> PhaseShifts {
        let mut t = self.case.theta.clone();
        t.set_reflecting(&self.case.ind, reflecting);
        t
    }

    /// `f_q` evaluated through the full closed-form breakdown; valid off the
    /// unit circle as well.
    fn direct(&self, reflecting: &[Complex64]) -> f64 {
        eval_f_q(&self.blocks(), &rate_breakdown(&self.case.csi, &self.full(reflecting)).unwrap())
    }

    fn reflecting(&self) -> usize {
        self.case.ind.num_reflecting()
    }
}

fn points(count: usize) -> impl Iterator<Item = Point> {
    (0u64..).map(Point::new).filter(|p| p.reflecting() > 0).take(count)
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    for (idx, pt) in points(50).enumerate() {
        let form = pt.form();
        let theta = pt.case.theta.reflecting(&pt.case.ind);
        let g = form.gradient(&theta);
        let mut fd = Vec::with_capacity(theta.len());
        for n in 0..theta.len() {
            let mut d = Complex64::new(0.0, 0.0);
            for (dir, unit) in [(Complex64::new(h, 0.0), Complex64::new(1.0, 0.0)), (Complex64::new(0.0, h), Complex64::new(0.0, 1.0))] {
                let (mut up, mut dn) = (theta.clone(), theta.clone());
                up[n] += dir;
                dn[n] -= dir;
                d += unit * ((pt.direct(&up) - pt.direct(&dn)) / (2.0 * h));
            }
            fd.push(d);
        }
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let err = diff / g.norm().max(1e-300);
        assert!(err < 1e-6, "point {idx}: relative gradient error {err:e}");
        if theta.len() <= 8 {
            let dense = form.gradient_dense(&form.j_tilde(), &form.k_tilde(), &theta);
            assert!((dense - &g).norm() <= 1e-10 * g.norm().max(1.0));
        }
    }
}

#[test]
fn compact_forms_reproduce_objective() {
    let mut checked = 0;
    for pt in points(30) {
        let form = pt.form();
        let mm = MmForm::build(&form, &MmOptions::default()).unwrap();
        let small = pt.reflecting() <= 8;
        let (j, k) = if small { (form.j_tilde(), form.k_tilde()) } else { (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)) };
        let mut r = rng::stream(checked as u64, 23);
        for _ in 0..4 {
            let theta = random_phases(&mut r, pt.reflecting());
            let direct = pt.direct(&theta);
            let scale = direct.abs().max(1.0);
            assert!((form.evaluate(&theta) - direct).abs() <= 1e-9 * scale);
            assert!((mm.g0_compact(&theta) + direct).abs() <= 1e-9 * scale);
            if small {
                assert!((form.evaluate_dense(&j, &k, &theta) - direct).abs() <= 1e-9 * scale);
            }
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn majorization_chain_and_tightness() {
    let mut pairs = 0;
    for pt in points(25) {
        let form = pt.form();
        for tier in [SecondTierBound::VBar, SecondTierBound::J2] {
            let opts = MmOptions { second_tier: tier, ..MmOptions::default() };
            let mm = MmForm::build(&form, &opts).unwrap();
            let mut r = rng::stream(pairs as u64, 29);
            for _ in 0..2 {
                let theta_t = random_phases(&mut r, pt.reflecting());
                let theta = random_phases(&mut r, pt.reflecting());
                let s = mm.surrogate(&theta_t, &opts);
                let scale = mm.g0(&theta_t).abs().max(1.0) + mm.lambda1 * (pt.reflecting() as f64).powi(2);
                let tol = 1e-8 * scale;
                assert!((mm.g1(&theta_t, &s) - mm.g0(&theta_t)).abs() <= tol);
                assert!((mm.g2(&theta_t, &s) - mm.g0(&theta_t)).abs() <= tol);
                let (g0, g1, g2) = (mm.g0(&theta), mm.g1(&theta, &s), mm.g2(&theta, &s));
                assert!((mm.g1_reduced(&theta, &s) - g1).abs() <= tol);
                assert!(g0 <= g1 + tol, "{tier:?}: g0 {g0} > g1 {g1}");
                if tier == SecondTierBound::VBar {
                    assert!(g1 <= g2 + tol, "g1 {g1} > g2 {g2}");
                }
                pairs += 1;
            }
        }
    }
    assert!(pairs >= 100);
}

#[test]
fn first_tier_bound_does_not_cover_second_tier() {
    // using λ1 in place of λmax(V̄) does not give an upper bound in general,
    // which is why the second tier recomputes its own eigenvalue
    let mut violated = false;
    for pt in points(10) {
        let opts = MmOptions { second_tier: SecondTierBound::J2, ..MmOptions::default() };
        let mm = MmForm::build(&pt.form(), &opts).unwrap();
        let mut r = rng::stream(3, 37);
        let theta_t = random_phases(&mut r, pt.reflecting());
        let s = mm.surrogate(&theta_t, &opts);
        let vbar = rdars_core::linalg::dense_lambda_max(&s.v_bar);
        violated |= vbar > mm.lambda1 * (1.0 + 1e-9);
    }
    assert!(violated);
}

#[test]
fn first_tier_bound_dominates_spectrum() {
    // x̃^H (J2 - λ1 I) x̃ ≤ 0 for unstructured x̃ = [x; y]
    let mut quotients = 0;
    for pt in points(10) {
        let mm = MmForm::build(&pt.form(), &MmOptions::default()).unwrap();
        let m = pt.reflecting();
        let mut r = rng::stream(quotients as u64, 31);
        for _ in 0..100 {
            let x: Vec<Complex64> = (0..m).map(|_| rng::complex_normal(&mut r)).collect();
            let y: Vec<Complex64> = (0..m * m).map(|_| rng::complex_normal(&mut r)).collect();
            let q = mm.j2_bilinear(&x, &y, &x, &y).re;
            let norm2: f64 = x.iter().chain(&y).map(|z| z.norm_sqr()).sum();
            assert!(q <= mm.lambda1 * norm2 * (1.0 + 1e-12), "{q} > {}", mm.lambda1 * norm2);
            quotients += 1;
        }
    }
    assert!(quotients >= 1000);
}

#[test]
fn mm_update_rules() {
    // the exact circle minimizer keeps MM monotone; the printed rule is
    // reported through `monotone` rather than assumed
    for pt in points(10) {
        let form = pt.form();
        let theta = pt.case.theta.reflecting(&pt.case.ind);
        for tier in [SecondTierBound::VBar, SecondTierBound::J2] {
            let opts = MmOptions { second_tier: tier, t_max: 200, ..MmOptions::default() };
            let out = mm_solve(&MmForm::build(&form, &opts).unwrap(), &theta, &opts).unwrap();
            assert!(out.monotone);
            assert!(out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0)));
        }
        let printed = MmOptions { update: MmUpdate::ConjugatePhase, t_max: 20, ..MmOptions::default() };
        let out = mm_solve(&MmForm::build(&form, &printed).unwrap(), &theta, &printed).unwrap();
        assert!(out.trace.iter().all(|v| v.is_finite()));
    }
}

fn solve(case: &Case, solver: PhaseSolver) -> rdars_core::fp_bcd::OptimizerState {
    let opts = BcdOptions { phase_solver: solver, ..BcdOptions::default() };
    bcd_solve(&case.cfg, &case.csi, default_state(&case.cfg, &case.csi).unwrap(), &opts).unwrap()
}

fn nondecreasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0))
}

#[test]
fn bcd_is_monotone_and_solvers_agree() {
    for seed in 0..20 {
        let case = common::random_case(seed);
        let rga = solve(&case, PhaseSolver::Rga(RgaOptions::default()));
        let mm = solve(&case, PhaseSolver::Mm(MmOptions::default()));
        for st in [&rga, &mm] {
            assert!(nondecreasing(&st.objective_trace), "seed {seed}: {:?}", st.objective_trace);
            assert!(nondecreasing(&st.block_trace), "seed {seed}");
            assert_eq!(st.rejected_phase_steps, 0, "seed {seed}");
            assert!(st.p.iter().all(|&p| (0.0..=case.cfg.p_max).contains(&p)));
            assert!(st.theta.reflecting(&case.ind).iter().all(|t| (t.norm() - 1.0).abs() < 1e-12));
        }
        let (a, b) = (rga.wsr_trace.last().unwrap(), mm.wsr_trace.last().unwrap());
        assert!((a - b).abs() <= 0.01 * a.max(*b), "seed {seed}: RGA {a} vs MM {b}");
    }
}

#[test]
fn final_objective_matches_log_rate() {
    // at convergence the duals are at their optimum, so f_q equals the
    // weighted log rate
    for seed in 0..10 {
        let case = common::random_case(seed);
        let st = solve(&case, PhaseSolver::Rga(RgaOptions::default()));
        let bd = rate_breakdown(&case.csi, &st.theta).unwrap();
        let w = case.cfg.weights();
        let eta = sinr_all(&st.p, &bd).unwrap();
        let chi = update_chi(&w, &st.p, &eta, &bd).unwrap();
        let fq = eval_f_q(&FixedBlocks { weights: &w, p: &st.p, eta: &eta, chi: &chi }, &bd);
        let target = weighted_log_rate(&w, &st.p, &bd).unwrap();
        assert!((fq - target).abs() <= 1e-10 * target.abs().max(1.0));
        assert!(*st.objective_trace.last().unwrap() <= target * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn reference_scale_plateau_within_fifteen_iterations() {
    let dep = Deployment::default();
    let sc = dep.realize(0).unwrap();
    let ind = build_indicator(32, 2, IndicatorPolicy::TopA).unwrap();
    let csi = derive_statistics(&sc.config, &sc.geometry, &ind).unwrap();
    let st = bcd_solve(&sc.config, &csi, default_state(&sc.config, &csi).unwrap(), &BcdOptions::default()).unwrap();
    assert!(st.converged);
    let last = *st.wsr_trace.last().unwrap();
    let first = st.wsr_trace.iter().position(|w| (last - w).abs() <= 1e-3 * last).unwrap();
    assert!(first <= 15, "within 0.1% of the final rate only after {first} iterations");
    assert!(nondecreasing(&st.objective_trace));
}

#[test]
fn weight_scaling_leaves_solution_unchanged() {
    // f_q is homogeneous in w with η, p unchanged and χ scaled by sqrt(c)
    let case = common::random_case(6);
    let mut scaled = case.clone();
    for u in &mut scaled.cfg.users {
        u.weight *= 7.5;
    }
    let a = solve(&case, PhaseSolver::Rga(RgaOptions::default()));
    let b = solve(&scaled, PhaseSolver::Rga(RgaOptions::default()));
    for (x, y) in a.p.iter().zip(&b.p) {
        assert!((x - y).abs() <= 1e-9 * x.max(1e-12));
    }
    for (x, y) in a.objective_trace.iter().zip(&b.objective_trace) {
        assert!((7.5 * x - y).abs() <= 1e-9 * y.abs().max(1.0));
    }
}

#[test]
fn degenerate_user_gets_zero_power() {
    // a user with no channel at all has zero signal, so χ = η = p = 0
    let mut case = common::case_with(3, 8, 9, 2, 3);
    case.cfg.users[1].gain_ub = 0.0;
    case.cfg.users[1].gain_ur = 0.0;
    case.csi = derive_statistics(&case.cfg, &case.geo, &case.ind).unwrap();
    let st = solve(&case, PhaseSolver::Rga(RgaOptions::default()));
    assert_eq!(st.p[1], 0.0);
    assert_eq!(st.eta[1], 0.0);
    assert_eq!(st.chi[1], 0.0);
    assert!(st.p[0] > 0.0 && st.p[2] > 0.0);
    assert!(nondecreasing(&st.objective_trace));
}

#[test]
fn single_user_form_has_only_signal_cross_term() {
    let case = common::case_with(8, 6, 9, 3, 1);
    let st = initial_state(&case.cfg, &case.csi, case.theta.clone(), case.p.clone()).unwrap();
    let w = case.cfg.weights();
    let coef = PhaseCoefficients::extract(&case.csi);
    let form = QuarticForm::build(&coef, &st.blocks(&w));
    let mm = MmForm::build(&form, &MmOptions::default()).unwrap();
    let (chi2, p) = (st.chi[0] * st.chi[0], st.p[0]);
    let expect = form.c_matrix(0) * Complex64::new(-chi2 * p * coef.s1[0] * coef.s2[0], 0.0);
    assert!((&mm.k4 - expect).norm() <= 1e-12 * mm.k4.norm().max(1e-300));
    assert!((form.alpha[0][0] + chi2 * p * coef.s1[0] * coef.s1[0]).abs() <= 1e-12 * form.alpha[0][0].abs());
}

#[test]
fn largest_eigenvalue_of_random_hermitian() {
    let mut r = rng::stream(5, 41);
    let g = CMatrix::from_fn(50, 50, |_, _| rng::complex_normal(&mut r));
    let a = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let e = lambda_max(&a, 1e-13, 200_000);
    assert_eq!(e.method, EigenMethod::PowerIteration);
    let certified = cholesky_certifies(&a, e.value);
    assert!(certified, "λ = {} is not certified within 1e-8", e.value);
}

/// Upper bound: `(λ + ε) I - A` admits a Cholesky factor. Lower bound: the
/// Rayleigh quotient of a vector refined by inverse iteration, which never
/// exceeds the largest eigenvalue.
fn cholesky_certifies(a: &CMatrix, lambda: f64) -> bool {
    let eps = 1e-8;
    let n = a.nrows();
    let shifted = CMatrix::identity(n, n) * Complex64::new(lambda + eps, 0.0) - a;
    let Some(chol) = shifted.cholesky() else { return false };
    let mut x = rdars_core::linalg::CVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..5 {
        x = chol.solve(&x);
        x /= Complex64::new(x.norm(), 0.0);
    }
    let rayleigh = (x.adjoint() * a * &x)[(0, 0)].re;
    rayleigh >= lambda - eps
}

#[test]
fn rga_and_mm_agree_on_fixed_blocks() {
    for pt in points(10) {
        let form = pt.form();
        let theta = pt.case.theta.reflecting(&pt.case.ind);
        let rga = rga_solve(&form, &theta, &RgaOptions::default()).unwrap();
        assert!(nondecreasing(&rga.trace));
        let opts = MmOptions::default();
        let mm = mm_solve(&MmForm::build(&form, &opts).unwrap(), &theta, &opts).unwrap();
        assert!(rga.trace.last().unwrap() >= &rga.trace[0]);
        assert!(mm.trace.last().unwrap() >= &mm.trace[0]);
    }
}

#[test]
fn reference_deployment_shapes() {
    // the reference deployment realizes with the documented array sizes
    let sc = Deployment::default().realize(1).unwrap();
    assert_eq!(sc.config.bs_array, ArrayShape::new(8, 16));
    assert_eq!(sc.config.rdars_array, ArrayShape::new(4, 8));
}
