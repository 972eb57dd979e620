use proptest::prelude::*;
use threshold_core::bounds::*;
use threshold_core::nonlinearity::*;

fn genuine() -> impl Strategy<Value = NonlinearitySpec> {
    (0.1..5.0f64, 0.02..0.48f64, any::<bool>()).prop_map(|(r, theta, ign)| {
        if ign {
            NonlinearitySpec::ignition(r, 2.0 * theta).unwrap()
        } else {
            NonlinearitySpec::bistable(r, theta).unwrap()
        }
    })
}

fn any_spec() -> impl Strategy<Value = NonlinearitySpec> {
    prop_oneof![
        genuine(),
        (0.1..5.0f64, 1.01..6.0f64).prop_map(|(r, p)| NonlinearitySpec::monostable(r, p).unwrap()),
        (0.05..0.95f64).prop_map(|t| NonlinearitySpec::toy_piecewise_linear(t).unwrap()),
        (0.05..0.95f64).prop_map(|t| NonlinearitySpec::toy_affine(t).unwrap()),
    ]
}

proptest! {
    #[test]
    fn sign_structure(spec in genuine(), s in 0.0..1.0f64) {
        let th = spec.theta;
        let below = s * th;
        let above = th + s * (1.0 - th);
        if s > 0.0 && s < 1.0 {
            prop_assert!(spec.eval(above) > 0.0);
            match spec.kind {
                Kind::Ignition => prop_assert_eq!(spec.eval(below), 0.0),
                _ => prop_assert!(spec.eval(below) < 0.0),
            }
        }
        for u in [0.0, th, 1.0, 1.0 + s, -s] {
            if u <= 0.0 || u >= 1.0 || u == th {
                prop_assert_eq!(spec.eval(u), 0.0);
            }
        }
    }

    #[test]
    fn envelope_rates_hold(spec in genuine(), s in 0.0..1.0f64, frac in 0.05..0.95f64) {
        let th = spec.theta;
        let top = if spec.kind == Kind::Bistable { 1.0 - th } else { 1.0 - 1e-9 };
        let delta = th + frac * (top - th);
        let sc = spec.structure_constants_at(delta).unwrap();
        let u = th + s * (sc.delta_plus - th);
        prop_assert!(spec.eval(u) <= sc.r_plus * (u - th) + 1e-14);
        let v = -1.0 + s * (sc.delta_minus + 1.0);
        prop_assert!(spec.eval(v) >= sc.r_minus * (v - th) - 1e-14);
    }

    #[test]
    fn flow_is_monotone(spec in any_spec(), a in 0.0..1.0f64, b in 0.0..1.0f64, dt in 0.001..0.05f64) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(spec.reaction_flow(lo, dt) <= spec.reaction_flow(hi, dt));
    }

    #[test]
    fn closed_form_flows_compose(theta in 0.05..0.95f64, u0 in 0.0..1.0f64, s in 0.0..2.0f64, t in 0.0..2.0f64) {
        for spec in [
            NonlinearitySpec::ignition(1.5, theta).unwrap(),
            NonlinearitySpec::toy_piecewise_linear(theta).unwrap(),
            NonlinearitySpec::toy_affine(theta).unwrap(),
        ] {
            let two = spec.reaction_flow(spec.reaction_flow(u0, s), t);
            let one = spec.reaction_flow(u0, s + t);
            prop_assert!((two - one).abs() <= 1e-9 * one.abs().max(1.0), "{:?}: {} vs {}", spec.kind, two, one);
        }
    }

    #[test]
    fn potential_is_minus_antiderivative(spec in any_spec(), u in 0.01..0.99f64) {
        let h = 1e-5;
        let d = (spec.potential(u + h) - spec.potential(u - h)) / (2.0 * h);
        prop_assert!((d + spec.eval(u)).abs() < 1e-6);
        prop_assert_eq!(spec.potential(0.0), 0.0);
    }

    #[test]
    fn heat_sup_monotone(n in 1usize..4, l in 0.1..10.0f64, t in 0.01..50.0f64, grow in 1.01..3.0f64) {
        let k = HeatIndicatorKernel::new(n, l, 1.0).unwrap();
        let wide = HeatIndicatorKernel::new(n, l * grow, 1.0).unwrap();
        let v = heat_sup_norm(&k, t).unwrap();
        let later = heat_sup_norm(&k, t * grow).unwrap();
        let wider = heat_sup_norm(&wide, t).unwrap();
        // erf rounds to 1 for L/(2 sqrt t) beyond about 6
        prop_assert!(later < v || (v == 1.0 && later == 1.0));
        prop_assert!(wider > v || (v == 1.0 && wider == 1.0));
    }

    #[test]
    fn toy_extinction_rhs_decreases(theta in 0.1..0.8f64, e in 0.001..0.05f64, l in 0.5..8.0f64, n in 1usize..4) {
        let delta = 0.5 * (1.0 + theta);
        prop_assume!(e < delta - theta);
        let a = toy_extinction_certificate(theta, e, l, delta, n).unwrap();
        let b = toy_extinction_certificate(theta, e, 1.1 * l, delta, n).unwrap();
        prop_assert!(b.witness.rhs < a.witness.rhs);
        prop_assert_eq!(a.witness.lhs, 1.0 + e / theta);
    }

    #[test]
    fn y_flow_is_convex(p in 1.5..6.0f64, tau in 0.0..2.0f64, xi in -1.0..0.5f64) {
        let h = 1e-3;
        let pts = [xi - h, xi, xi + h];
        let blowup = |x: f64| if x > 0.0 { 1.0 / ((p - 1.0) * x.powf(p - 1.0)) } else { f64::INFINITY };
        prop_assume!(pts.iter().all(|&x| tau < 0.9 * blowup(x)));
        let y: Vec<f64> = pts.iter().map(|&x| y_flow(tau, x, p).unwrap()).collect();
        prop_assert!(y[0] - 2.0 * y[1] + y[2] >= -1e-9);
    }

    #[test]
    fn predicted_bounds_scale_with_rate(spec in genuine(), factor in 0.5..8.0f64) {
        let (lo, hi) = predicted_bounds(&spec).unwrap();
        let (lo2, hi2) = predicted_bounds(&spec.scaled(factor)).unwrap();
        prop_assert!((lo2 * factor.sqrt() - lo).abs() < 1e-12 * lo);
        prop_assert!((hi2 * factor.sqrt() - hi).abs() < 1e-12 * hi);
        prop_assert!((hi / lo - 2.0).abs() < 1e-12);
    }
}
