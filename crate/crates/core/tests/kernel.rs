use proptest::prelude::*;
use threshold_core::bounds::{heat_profile_1d, heat_sup_norm, HeatIndicatorKernel};
use threshold_core::nonlinearity::{Kind, NonlinearitySpec};
use threshold_core::solver::{observables, Boundary, Solver, SolverConfig};

fn heat_solver(r: f64, h: f64, boundary: Boundary, dimension: usize) -> Solver {
    let mut c = SolverConfig::default().with_grid(r, h, h);
    c.boundary = boundary;
    c.dimension = dimension;
    Solver::new(c).unwrap()
}

fn gaussian(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}

#[test]
fn crank_nicolson_is_second_order() {
    let heat = NonlinearitySpec::pure_heat();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let s = heat_solver(20.0, h, Boundary::NeumannZero, 1);
            let mut u = s.from_fn(|x| gaussian(x, 1.0));
            s.run(&mut u, &heat, 1.0).unwrap();
            s.grid()
                .nodes
                .iter()
                .zip(&u.values)
                .map(|(&x, &v)| (v - gaussian(x, 2.0)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn neumann_heat_conserves_mass() {
    let heat = NonlinearitySpec::pure_heat();
    for dimension in [1, 3] {
        let s = heat_solver(10.0, 0.02, Boundary::NeumannZero, dimension);
        let mut u = s.initial_indicator(1.0, 3.01).unwrap();
        let m0 = observables(&u, &heat).mass;
        s.run(&mut u, &heat, 40.0).unwrap();
        let m1 = observables(&u, &heat).mass;
        assert!((m1 - m0).abs() <= 1e-10 * m0, "N = {dimension}: {m0} -> {m1}");
    }
}

// nodes at |x| = L ± dx/2 straddle the jump, so the discrete indicator has support exactly B_L
#[test]
fn center_value_matches_heat_kernel() {
    let heat = NonlinearitySpec::pure_heat();
    for dimension in [1, 2, 3] {
        let s = heat_solver(60.0, 0.02, Boundary::NeumannZero, dimension);
        let l = 2.01;
        let kernel = HeatIndicatorKernel::new(dimension, l, 1.0).unwrap();
        let mut u = s.initial_indicator(1.0, l).unwrap();
        for t in [1.0, 5.0, 20.0] {
            s.run(&mut u, &heat, t).unwrap();
            let exact = heat_sup_norm(&kernel, t).unwrap();
            assert!((u.sup_norm() - exact).abs() < 1e-3, "N = {dimension}, t = {t}: {} vs {exact}", u.sup_norm());
        }
    }
}

#[test]
fn profile_matches_heat_kernel() {
    let heat = NonlinearitySpec::pure_heat();
    let s = heat_solver(60.0, 0.02, Boundary::NeumannZero, 1);
    let kernel = HeatIndicatorKernel::new(1, 1.01, 1.0).unwrap();
    let mut u = s.initial_indicator(1.0, 1.01).unwrap();
    s.run(&mut u, &heat, 5.0).unwrap();
    // CN keeps a grid-scale oscillation of order 1e-3 on the nodes next to the initial jump
    for x in [0.0, 0.5, 0.8, 1.3, 2.0, 4.0, 8.0] {
        let exact = heat_profile_1d(&kernel, 5.0, x).unwrap();
        assert!((u.value_at(x) - exact).abs() < 1e-4, "x = {x}: {} vs {exact}", u.value_at(x));
        assert!((u.value_at(-x) - exact).abs() < 1e-4);
    }
}

#[test]
fn dirichlet_boundary_stays_zero() {
    let heat = NonlinearitySpec::pure_heat();
    let s = heat_solver(5.0, 0.05, Boundary::DirichletZero, 1);
    let mut u = s.from_fn(|_| 1.0);
    s.run(&mut u, &heat, 2.0).unwrap();
    assert_eq!(u.values[0], 0.0);
    assert_eq!(*u.values.last().unwrap(), 0.0);
    assert!(u.center_value() < 1.0);
}

fn spec_for(kind: Kind) -> NonlinearitySpec {
    match kind {
        Kind::Ignition => NonlinearitySpec::ignition(1.0, 0.4).unwrap(),
        Kind::Bistable => NonlinearitySpec::bistable(1.0, 0.3).unwrap(),
        Kind::DegenerateMonostable => NonlinearitySpec::monostable(1.0, 3.0).unwrap(),
        Kind::ToyPiecewiseLinear => NonlinearitySpec::toy_piecewise_linear(0.4).unwrap(),
        Kind::ToyAffine => NonlinearitySpec::toy_affine(0.4).unwrap(),
    }
}

fn ordered_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 6).prop_map(|v| {
        let lower = v.iter().map(|&(a, b)| a.min(b)).collect();
        let upper = v.iter().map(|&(a, b)| a.max(b)).collect();
        (lower, upper)
    })
}

// piecewise-constant data on six cells of [-3, 3]
fn cells(s: &Solver, levels: &[f64]) -> threshold_core::FieldState {
    s.from_fn(|x| {
        if x.abs() >= 3.0 {
            0.0
        } else {
            levels[((x + 3.0) as usize).min(5)]
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn comparison_principle((lower, upper) in ordered_pair()) {
        let s = heat_solver(10.0, 0.05, Boundary::NeumannZero, 1);
        for kind in [Kind::Ignition, Kind::Bistable, Kind::DegenerateMonostable, Kind::ToyPiecewiseLinear, Kind::ToyAffine] {
            let spec = spec_for(kind);
            let mut u = cells(&s, &lower);
            let mut v = cells(&s, &upper);
            s.run(&mut u, &spec, 3.0).unwrap();
            s.run(&mut v, &spec, 3.0).unwrap();
            for (a, b) in u.values.iter().zip(&v.values) {
                prop_assert!(a <= &(b + 1e-12), "{kind}: {a} > {b}");
            }
        }
    }
}
