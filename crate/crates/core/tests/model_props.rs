use proptest::prelude::*;

use cnls_core::grid::{Field, Grid, State};
use cnls_core::model::{
    ball_minima, energy_frozen, global_thresholds, h_func, local_thresholds, nehari_value, theta_project,
    FrozenParams, PotentialSpec, SystemOperator,
};

fn bump(g: &Grid, c: f64, width: f64) -> Field {
    Field::from_fn(g, move |x| (1.0 + c * x[0]) * (-(x[0] - c) * (x[0] - c) / (width * width)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thresholds_are_ordered(k1 in 0.05f64..20.0, k2 in 0.05f64..20.0) {
        let t = local_thresholds(k1, k2).unwrap();
        prop_assert!(t.b0 >= 1.0);
        prop_assert!(t.b0 <= t.b1 + 1e-12, "{:?}", t);
        prop_assert_eq!(t.b_z, t.b0);
    }

    #[test]
    fn thresholds_depend_on_the_ratio_only(k1 in 0.05f64..20.0, k2 in 0.05f64..20.0, s in 0.1f64..10.0) {
        let a = local_thresholds(k1, k2).unwrap();
        let b = local_thresholds(k2, k1).unwrap();
        let c = local_thresholds(s * k1, s * k2).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((a.b1 - c.b1).abs() <= 1e-12 * a.b1);
        prop_assert!((a.b0 - c.b0).abs() <= 1e-12 * a.b0);
    }

    #[test]
    fn h_is_the_smaller_branch(s in 0.05f64..20.0) {
        let h = h_func(s).unwrap();
        let first = s / 32.0 * (7.0 + 1.0 / (s * s)).powi(2) - 1.0;
        let second = (s * s + 3.0) / 4.0;
        prop_assert!(h <= first && h <= second);
        prop_assert!(h == first || h == second);
    }

    #[test]
    fn global_thresholds_bracket_one(alpha in 0.1f64..1.0, sv in 1.0f64..5.0, sw in 1.0f64..5.0) {
        let g = global_thresholds(alpha, sv, sw).unwrap();
        prop_assert!(g.b0_inf <= 1.0 && g.b1_inf >= 1.0);
        prop_assert!(g.b2_inf >= 1.0);
    }

    #[test]
    fn ball_minima_shrink_with_radius(x in -2.0f64..2.0, r in 0.0f64..1.0) {
        let v = PotentialSpec::CappedQuadratic { base: 1.0, curvature: 0.7, center: vec![0.3], cap: 2.0 };
        let w = PotentialSpec::shifted(v.clone(), 0.25);
        let (v0, w0) = ball_minima(&v, &w, &[x], 0.0, 9).unwrap();
        prop_assert_eq!((v0, w0), (v.eval(&[x]), w.eval(&[x])));
        let (v1, w1) = ball_minima(&v, &w, &[x], r, 9).unwrap();
        let (v2, w2) = ball_minima(&v, &w, &[x], r + 0.5, 9).unwrap();
        let tol = 1e-9;
        prop_assert!(v2 <= v1 + tol && v1 <= v0 + tol, "{} {} {}", v0, v1, v2);
        prop_assert!(w2 <= w1 + tol && w1 <= w0 + tol, "{} {} {}", w0, w1, w2);
    }

    #[test]
    fn theta_projection_lands_on_nehari(
        k1 in 0.2f64..3.0, k2 in 0.2f64..3.0, b in 0.0f64..4.0,
        cu in -0.5f64..0.5, cv in -0.5f64..0.5, t in 0.01f64..10.0,
    ) {
        let g = Grid::new(1, 10.0, 257).unwrap();
        let p = FrozenParams::new(k1, k2, b).unwrap();
        let s = State::new(bump(&g, cu, 1.5).scaled(t), bump(&g, cv, 0.8)).unwrap();
        let (theta, proj) = theta_project(&s, &p).unwrap();
        prop_assert!(theta > 0.0);
        let e = energy_frozen(&proj, &p).unwrap();
        prop_assert!(nehari_value(&proj, &p).unwrap().abs() <= 1e-10 * e);
        // The projection is the maximum of the energy along the ray.
        for f in [0.9, 1.1] {
            prop_assert!(energy_frozen(&proj.scaled(f), &p).unwrap() < e);
        }
        let (again, _) = theta_project(&proj, &p).unwrap();
        prop_assert!((again - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn energy_is_even_in_the_swap(k1 in 0.2f64..3.0, k2 in 0.2f64..3.0, b in 0.0f64..4.0, cu in -0.5f64..0.5) {
        let g = Grid::new(1, 10.0, 257).unwrap();
        let p = FrozenParams::new(k1, k2, b).unwrap();
        let (u, v) = (bump(&g, cu, 1.5), bump(&g, -cu, 0.8));
        let a = energy_frozen(&State::new(u.clone(), v.clone()).unwrap(), &p).unwrap();
        let c = energy_frozen(&State::new(v, u).unwrap(), &p.swapped()).unwrap();
        prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn energy_scales_along_rays(k1 in 0.2f64..3.0, k2 in 0.2f64..3.0, b in 0.0f64..4.0, t in 0.1f64..3.0) {
        let g = Grid::new(1, 10.0, 257).unwrap();
        let p = FrozenParams::new(k1, k2, b).unwrap();
        let s = State::new(bump(&g, 0.2, 1.5), bump(&g, -0.1, 0.8)).unwrap();
        let parts = SystemOperator::frozen(&g, &p).parts(&s).unwrap();
        let expected = 0.5 * t * t * parts.quadratic() - 0.25 * t.powi(4) * parts.quartic();
        let e = energy_frozen(&s.scaled(t), &p).unwrap();
        prop_assert!((e - expected).abs() <= 1e-11 * (1.0 + expected.abs()));
    }

    #[test]
    fn potential_gradient_matches_differences(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let centers = vec![vec![-1.0, 0.0], vec![1.0, 0.5]];
        let dist = |c: &[f64]| ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
        // Off the ridge where the nearest well switches.
        prop_assume!((dist(&centers[0]) - dist(&centers[1])).abs() > 0.05);
        let v = PotentialSpec::DoubleWell { base: 1.0, depth: 0.8, centers, width: 0.9, cap: 9.0 };
        let w = PotentialSpec::shifted(PotentialSpec::CappedQuadratic { base: 0.5, curvature: 0.3, center: vec![0.1, -0.2], cap: 9.0 }, 0.4);
        let h = 1e-6;
        for pot in [&v, &w] {
            let g = pot.gradient(&[x, y]);
            let dx = (pot.eval(&[x + h, y]) - pot.eval(&[x - h, y])) / (2.0 * h);
            let dy = (pot.eval(&[x, y + h]) - pot.eval(&[x, y - h])) / (2.0 * h);
            prop_assert!((g[0] - dx).abs() < 1e-5 && (g[1] - dy).abs() < 1e-5, "{:?} vs ({}, {})", g, dx, dy);
        }
    }
}

#[test]
fn shifted_potential_adds_constant() {
    let inner = PotentialSpec::CappedQuadratic { base: 1.0, curvature: 2.0, center: vec![0.0, 0.0], cap: 1.5 };
    let w = PotentialSpec::shifted(inner.clone(), 0.5);
    for x in [[0.0, 0.0], [0.3, -0.2], [2.0, 2.0]] {
        assert_eq!(w.eval(&x), inner.eval(&x) + 0.5);
        assert_eq!(w.gradient(&x), inner.gradient(&x));
    }
    // On the capped plateau the gradient vanishes.
    assert_eq!(inner.gradient(&[2.0, 2.0])[..2], [0.0, 0.0]);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(FrozenParams::new(0.0, 1.0, 1.0).is_err());
    assert!(FrozenParams::new(1.0, -1.0, 1.0).is_err());
    assert!(FrozenParams::new(1.0, 1.0, f64::NAN).is_err());
    assert!(local_thresholds(1.0, 0.0).is_err());
    assert!(global_thresholds(2.0, 1.0, 3.0).is_err());
}
