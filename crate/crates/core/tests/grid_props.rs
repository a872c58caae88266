use proptest::prelude::*;

use cnls_core::fastsine::ShiftedLaplacian;
use cnls_core::grid::{dirichlet_energy, inner, integrate, laplacian_apply, mixed_sq, Field, Grid};
use cnls_core::par;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=3, 0.5f64..6.0).prop_flat_map(|(d, l)| {
        let max = [0, 200, 40, 14][d];
        (Just(d), Just(l), 8usize..max).prop_map(|(d, l, n)| Grid::new(d, l, n).unwrap())
    })
}

/// Smooth field with random coefficients, zero on the boundary.
fn field(g: &Grid, c: [f64; 3]) -> Field {
    let l = g.half_width();
    Field::from_fn(g, move |x| {
        let mut v = 1.0;
        for (a, xa) in x.iter().enumerate() {
            let t = (xa + l) / (2.0 * l);
            v *= (std::f64::consts::PI * t).sin() * (1.0 + c[a] * t);
        }
        v
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs())).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ravel_inverts_unravel(g in grid_strategy(), seed in 0usize..1_000_000) {
        let flat = seed % g.len();
        let idx = g.unravel(flat);
        prop_assert_eq!(g.ravel(&idx[..g.dim()]), flat);
    }

    #[test]
    fn quadrature_is_homogeneous(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9), a in 0.1f64..4.0) {
        let f = field(&g, c);
        for p in [1u32, 2, 4] {
            let lhs = integrate(&f.scaled(a), p).unwrap();
            let rhs = a.powi(p as i32) * integrate(&f, p).unwrap();
            prop_assert!(rel(lhs, rhs) < 1e-12, "p={} {} vs {}", p, lhs, rhs);
        }
    }

    #[test]
    fn laplacian_is_symmetric(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9), e in prop::array::uniform3(-0.9f64..0.9)) {
        let (f, h) = (field(&g, c), field(&g, e));
        let a = inner(&laplacian_apply(&f), &h).unwrap();
        let b = inner(&f, &laplacian_apply(&h)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn summation_by_parts(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9)) {
        let f = field(&g, c);
        let d = dirichlet_energy(&f);
        let e = -inner(&laplacian_apply(&f), &f).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(rel(d, e) < 1e-10, "{} vs {}", d, e);
    }

    #[test]
    fn mixed_term_is_symmetric_and_bounded(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9), e in prop::array::uniform3(-0.9f64..0.9)) {
        let (f, h) = (field(&g, c), field(&g, e));
        let m = mixed_sq(&f, &h).unwrap();
        prop_assert_eq!(m.to_bits(), mixed_sq(&h, &f).unwrap().to_bits());
        // Cauchy–Schwarz: ∫f²h² ≤ (∫f⁴ ∫h⁴)^{1/2}.
        let bound = (integrate(&f, 4).unwrap() * integrate(&h, 4).unwrap()).sqrt();
        prop_assert!(m <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn fast_solver_inverts_operator(g in grid_strategy(), s in 0.1f64..3.0, shift in 0.05f64..5.0, c in prop::array::uniform3(-0.9f64..0.9)) {
        let x = field(&g, c);
        let lap = laplacian_apply(&x);
        let rhs: Vec<f64> = x.values().iter().zip(lap.values()).map(|(x, l)| -s * l + shift * x).collect();
        let mut out = vec![0.0; g.len()];
        ShiftedLaplacian::new(&g, s, shift).solve(&rhs, &mut out);
        let scale = x.max_abs();
        for (a, b) in out.iter().zip(x.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn binary_round_trip(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9)) {
        let f = field(&g, c);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = Field::read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn sampling_reproduces_nodes(g in grid_strategy(), c in prop::array::uniform3(-0.9f64..0.9), seed in 0usize..1_000_000) {
        let f = field(&g, c);
        let j = seed % g.len();
        let x = g.position(j);
        prop_assert_eq!(f.sample(&x[..g.dim()]).to_bits(), f.values()[j].to_bits());
    }

    #[test]
    fn reductions_ignore_thread_layout(len in 1usize..20_000, chunk in 1usize..5000) {
        let f = |r: std::ops::Range<usize>| r.map(|i| ((i as f64) * 0.37).sin()).sum::<f64>();
        let a = par::sum_chunks(len, chunk, f);
        let b = par::sequential(|| par::sum_chunks(len, chunk, f));
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn grid_rejects_bad_shapes() {
    assert!(Grid::new(0, 1.0, 9).is_err());
    assert!(Grid::new(4, 1.0, 9).is_err());
    assert!(Grid::new(1, -1.0, 9).is_err());
    assert!(Grid::new(1, 1.0, 2).is_err());
}

#[test]
fn boundary_values_are_rejected() {
    let g = Grid::new(1, 1.0, 8).unwrap();
    let mut v = vec![0.0, 1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 0.0];
    assert!(Field::from_values(&g, v.clone()).is_ok());
    v[7] = 1e-300;
    assert!(Field::from_values(&g, v.clone()).is_err());
    v[7] = 0.0;
    v[3] = f64::NAN;
    assert!(Field::from_values(&g, v).is_err());
}
