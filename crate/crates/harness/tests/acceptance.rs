//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line for each
//! and exits nonzero if any failed.

use std::ops::ControlFlow;
use std::process::ExitCode;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use threshold_core::bounds::*;
use threshold_core::solver::{observables, Boundary};
use threshold_core::threshold::BisectionOptions;
use threshold_core::*;
use threshold_lab::presets::{self, Budget};
use threshold_lab::reproduce::TableOptions;
use threshold_lab::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn c1_table1() -> Outcome {
    let opts = TableOptions {
        window: Some((10f64.powf(-2.5), 0.1)),
        points: Some(8),
        jobs: Some(4),
        ..TableOptions::new(Budget::Desk)
    };
    let report = reproduce_table_with(TableId::Table1, &opts).expect("table 1 sweep");
    let mut pass = true;
    let mut detail = vec![];
    for (row, target) in report.rows.iter().zip([1.04, 1.01]) {
        pass &= within(row.rescaled, target, 0.06);
        detail.push(format!("theta {} rescaled {:.4} (target {target} +-0.06)", row.theta, row.rescaled));
    }
    outcome(pass, detail.join("; "))
}

fn c2_table2() -> Outcome {
    let opts = TableOptions {
        jobs: Some(4),
        ..TableOptions::new(Budget::Desk)
    };
    let report = reproduce_table_with(TableId::Table2, &opts).expect("table 2 sweep");
    let mut pass = true;
    let mut detail = vec![format!("eps in [{:.0e}, {:.0e}]", report.window.0, report.window.1)];
    for (row, (slope, rescaled)) in report.rows.iter().zip([(4.04, 1.61), (3.45, 1.69)]) {
        pass &= within(row.fit.slope, slope, 0.10) && within(row.rescaled, rescaled, 0.06);
        detail.push(format!(
            "theta {} s_m {:.4} (target {slope} +-0.10) rescaled {:.4} (target {rescaled} +-0.06)",
            row.theta, row.fit.slope, row.rescaled
        ));
    }
    outcome(pass, detail.join("; "))
}

fn c3_corridor() -> Outcome {
    let mut pass = true;
    let mut detail = vec![];
    for spec in [NonlinearitySpec::ignition(1.0, 0.5).unwrap(), NonlinearitySpec::bistable(1.0, 0.25).unwrap()] {
        let report = verify_bounds(&spec, &[1e-2], Budget::Desk, None).expect("corridor sweep");
        pass &= report.all_pass() && !report.checks.is_empty();
        for c in &report.checks {
            detail.push(format!("{} ratio {:.4} in ({:.3}, {:.3})", spec.kind, c.value, c.lower, c.upper));
        }
    }
    outcome(pass, detail.join("; "))
}

fn c4_theta_study() -> Outcome {
    let study = theta_dependence_study(None, None, Budget::Desk, None).expect("theta study");
    let zero = study.near_zero.slope;
    let half = study.near_half.slope;
    let pass = (4.6..=5.1).contains(&zero) && (0.94..=1.04).contains(&half);
    outcome(
        pass,
        format!(
            "near-zero slope {zero:.4} (need [4.6, 5.1], {}); near-half log-slope {half:.4} (need [0.94, 1.04], {})",
            if (4.6..=5.1).contains(&zero) { "ok" } else { "out" },
            if (0.94..=1.04).contains(&half) { "ok" } else { "out" }
        ),
    )
}

fn c5_monostable() -> Outcome {
    let plan = presets::load(presets::MONOSTABLE).unwrap();
    let rows = run_sweep(&plan).expect("monostable sweep");
    let scaled: Vec<f64> = rows
        .iter()
        .map(|r| r.job.epsilon.powf(1.5) * r.outcome.as_ref().map_or(f64::NAN, |t| t.l_star))
        .collect();
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let bounded = scaled.iter().all(|v| v.is_finite() && *v > 0.0) && max / min <= 2.5;

    // sup(t) sqrt(t) along a certified extinct run
    let spec = NonlinearitySpec::monostable(1.0, 4.0).unwrap();
    let k = default_monostable_k(&spec);
    let epsilon = 0.5;
    let l = 0.9 * monostable_extinction_radius(&spec, k, epsilon, 1).unwrap();
    let cert = monostable_extinction_certificate(&spec, k, epsilon, l, 1).unwrap();
    let solver = Solver::new(SolverConfig::default().with_grid(60.0, 0.02, 0.02)).unwrap();
    let mut u = solver.initial_indicator(epsilon, l).unwrap();
    let mut trace = vec![];
    solver
        .evolve(&mut u, &spec, 200.0, 1.0, |st, o| {
            if st.t >= 10.0 - 1e-9 {
                trace.push(o.sup_norm * st.t.sqrt());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
    let nonincreasing = trace.windows(2).all(|w| w[1] <= w[0]);
    let phi = (1.0 - cert.witness.lhs).powf(-1.0 / 3.0);
    let ceiling = epsilon * phi * l / std::f64::consts::PI.sqrt();
    let below = trace.iter().all(|&v| v <= ceiling);
    let (first, last) = (trace[0], *trace.last().unwrap());
    outcome(
        bounded && cert.verdict == Verdict::Extinction && nonincreasing,
        format!(
            "eps^1.5 L* {:?} max/min {:.4} (need <= 2.5, {}); certified pair eps {epsilon} L {l:.4}: sup*sqrt(t) {first:.4} at t=10 -> {last:.4} at t=200, nonincreasing: {}; below heat ceiling eps*phi*L/sqrt(pi) = {ceiling:.4}: {}",
            scaled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            max / min,
            if bounded { "ok" } else { "out" },
            if nonincreasing { "yes" } else { "no" },
            if below { "yes" } else { "no" }
        ),
    )
}

fn toy_solver(r: f64) -> Solver {
    let mut c = SolverConfig::default().with_grid(r, 0.02, 0.02);
    c.t_final = 1.0;
    Solver::new(c).unwrap()
}

fn c6_certificates() -> Outcome {
    let mut worst_ext = f64::MIN;
    let s = toy_solver(40.0);
    let ext = [(0.3, 0.05), (0.5, 0.05), (0.5, 0.01), (0.7, 0.02), (0.4, 0.1)];
    for (theta, epsilon) in ext {
        let delta = 0.5 * (1.0 + theta);
        let l = 0.95 * largest_accepted(|l| Ok(toy_extinction_certificate(theta, epsilon, l, delta, 1)?.margin > 0.0), 0.1, 1e-10).unwrap();
        let spec = NonlinearitySpec::toy_piecewise_linear(theta).unwrap();
        let mut u = s.initial_indicator(theta + epsilon, l).unwrap();
        s.run(&mut u, &spec, extinction_time(theta, epsilon, delta).unwrap()).unwrap();
        worst_ext = worst_ext.max(u.sup_norm() - theta);
    }
    let mut worst_prop = f64::MAX;
    let s = toy_solver(80.0);
    let prop = [(0.3, 0.05, 0.2), (0.5, 0.05, 0.2), (0.5, 0.01, 0.1), (0.4, 0.02, 0.3), (0.6, 0.1, 0.2)];
    for (theta, epsilon, k) in prop {
        let p = NonextinctionParams::new(theta, 0.9, k);
        let l = 1.05 * smallest_accepted(|l| Ok(toy_nonextinction_bound(&p, epsilon, l, 1)?.margin > 0.0), 0.1, 1e-10).unwrap();
        let (_, t_eps) = toy_nonextinction_lower_bound(&p, epsilon, l, 1).unwrap();
        let spec = NonlinearitySpec::toy_affine(theta).unwrap();
        let mut u = s.initial_indicator(theta + epsilon, l).unwrap();
        s.run(&mut u, &spec, t_eps).unwrap();
        worst_prop = worst_prop.min(u.min_within(k * l) - p.alpha_prime);
    }
    outcome(
        worst_ext <= 1e-3 && worst_prop >= -1e-3,
        format!(
            "{} extinction points, max sup(T_eps) - theta = {worst_ext:.3e} (need <= 1e-3); {} propagation points, min over B_kL - alpha' = {worst_prop:.3e} (need >= -1e-3)",
            ext.len(),
            prop.len()
        ),
    )
}

fn gaussian(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}

fn c7_kernel() -> Outcome {
    let heat = NonlinearitySpec::pure_heat();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let s = Solver::new(SolverConfig::default().with_grid(20.0, h, h)).unwrap();
            let mut u = s.from_fn(|x| gaussian(x, 1.0));
            s.run(&mut u, &heat, 1.0).unwrap();
            s.grid().nodes.iter().zip(&u.values).map(|(&x, &v)| (v - gaussian(x, 2.0)).abs()).fold(0.0, f64::max)
        })
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let order_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));

    let mut c = SolverConfig::default().with_grid(10.0, 0.02, 0.02);
    c.boundary = Boundary::NeumannZero;
    let s = Solver::new(c).unwrap();
    let mut u = s.initial_indicator(1.0, 3.01).unwrap();
    let m0 = observables(&u, &heat).mass;
    s.run(&mut u, &heat, 40.0).unwrap();
    let drift = (observables(&u, &heat).mass - m0).abs() / m0;
    let mass_ok = drift <= 1e-10;

    let s = Solver::new(SolverConfig::default().with_grid(10.0, 0.05, 0.05)).unwrap();
    let specs = [
        NonlinearitySpec::ignition(1.0, 0.4).unwrap(),
        NonlinearitySpec::bistable(1.0, 0.3).unwrap(),
        NonlinearitySpec::monostable(1.0, 3.0).unwrap(),
        NonlinearitySpec::toy_piecewise_linear(0.4).unwrap(),
        NonlinearitySpec::toy_affine(0.4).unwrap(),
    ];
    let strategy = proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), 6);
    let mut runner = TestRunner::deterministic();
    let mut violations = 0;
    let mut pairs = 0;
    for _ in 0..5 {
        let v = strategy.new_tree(&mut runner).unwrap().current();
        let cells = |pick: fn(f64, f64) -> f64| {
            let levels: Vec<f64> = v.iter().map(|&(a, b)| pick(a, b)).collect();
            s.from_fn(move |x| if x.abs() >= 3.0 { 0.0 } else { levels[((x + 3.0) as usize).min(5)] })
        };
        for spec in &specs {
            let mut lo = cells(f64::min);
            let mut hi = cells(f64::max);
            s.run(&mut lo, spec, 3.0).unwrap();
            s.run(&mut hi, spec, 3.0).unwrap();
            pairs += 1;
            if lo.values.iter().zip(&hi.values).any(|(a, b)| *a > b + 1e-12) {
                violations += 1;
            }
        }
    }

    let s = Solver::new(SolverConfig::default().with_grid(60.0, 0.02, 0.02)).unwrap();
    let e = 0.05f64;
    let rule = ClassificationRule::default().with_horizon((8.0 * (1.0 / e).ln()).max(60.0));
    let opts = BisectionOptions::default();
    let l_star = |spec: &NonlinearitySpec| bisect_threshold(&s, spec, spec.theta + e, e, &rule, &opts).unwrap().l_star;
    let mut worst_rescale = 0.0f64;
    for (unit, fast) in [
        (NonlinearitySpec::ignition(1.0, 0.5).unwrap(), NonlinearitySpec::ignition(4.0, 0.5).unwrap()),
        (NonlinearitySpec::bistable(1.0, 0.3).unwrap(), NonlinearitySpec::bistable(2.0, 0.3).unwrap()),
    ] {
        worst_rescale = worst_rescale.max((l_star(&fast) - l_star(&unit) / fast.r.sqrt()).abs());
    }
    let rescale_ok = worst_rescale < 2.0 * opts.resolution;

    outcome(
        order_ok && mass_ok && violations == 0 && rescale_ok,
        format!(
            "CN error ratios {:?} (need [3.5, 4.5]); mass drift {drift:.2e} (need <= 1e-10); comparison {violations} violations in {pairs} pairs; rescaling gap {worst_rescale:.4} (need < {})",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
            2.0 * opts.resolution
        ),
    )
}

fn csv_bytes(plan: &SweepPlan) -> Vec<u8> {
    let rows = run_sweep(plan).expect("determinism sweep");
    let records: Vec<SweepRecord> = rows.iter().filter_map(|r| r.record()).collect();
    let mut out = vec![];
    write_csv(&mut out, &records).unwrap();
    out
}

fn c8_determinism() -> Outcome {
    let mut plan = presets::load(presets::TABLE1_DESK).unwrap();
    plan.record_timing = false;
    plan.jobs = 1;
    let serial = csv_bytes(&plan);
    plan.jobs = 4;
    let parallel = csv_bytes(&plan);
    outcome(
        serial == parallel && !serial.is_empty(),
        format!("{} rows, {} bytes, serial == parallel: {}", plan.grid.len(), serial.len(), serial == parallel),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("C1 ignition slope table (desk)", c1_table1),
        ("C2 bistable slope table (desk)", c2_table2),
        ("C3 threshold corridor at eps = 1e-2", c3_corridor),
        ("C4 theta dependence slopes (desk)", c4_theta_study),
        ("C5 monostable scaling and decay", c5_monostable),
        ("C6 certificate/solver consistency", c6_certificates),
        ("C7 numerical kernel properties", c7_kernel),
        ("C8 serial vs parallel determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!("{} {name} [{:.1}s]: {}", if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
