use std::sync::OnceLock;

use proptest::prelude::*;

use cnls_core::grid::Grid;
use cnls_core::model::{FrozenParams, PotentialSpec};
use cnls_core::sigma::{
    clarke_critical_test, min_norm_in_hull, sigma_map, sigma_reduced, AnalyzeNodes, ReducedSigmaCache, Region,
    SigmaContext, SigmaSample,
};
use cnls_core::solver::SolverOptions;
use cnls_core::Error;

fn grid() -> Grid {
    Grid::new(1, 20.0, 1025).unwrap()
}

fn cache() -> &'static ReducedSigmaCache {
    static CACHE: OnceLock<ReducedSigmaCache> = OnceLock::new();
    CACHE.get_or_init(|| ReducedSigmaCache::build(&grid(), &[0.25, 0.5, 1.0], &[0.0, 1.5, 3.0], &SolverOptions::default()).unwrap())
}

#[test]
fn knots_reproduce_closed_forms() {
    let c = cache();
    assert!((c.gamma - 4.0 / 3.0).abs() < 1e-3, "gamma {}", c.gamma);
    for w in [0.25f64, 0.5, 1.0] {
        let scalar = c.gamma * w.powf(1.5);
        assert!((c.reduced(w, 0.0).unwrap() - scalar).abs() < 1e-9 * scalar);
    }
    // Equal potentials, b > 1: the symmetric vector state 2Γ/(1 + b).
    let v = c.reduced(1.0, 3.0).unwrap();
    assert!((v - 2.0 * c.gamma / 4.0).abs() < 1e-6, "{v}");
    assert!(c.vector_found[2][2]);
}

#[test]
fn reduced_energy_is_homogeneous_and_swap_symmetric() {
    let c = cache();
    let p = FrozenParams::new(0.9, 0.6, 2.0).unwrap();
    let base = sigma_reduced(&p, c).unwrap();
    assert_eq!(base.to_bits(), sigma_reduced(&p.swapped(), c).unwrap().to_bits());
    for t in [0.5, 3.0] {
        let q = FrozenParams::new(t * p.kappa1, t * p.kappa2, p.b).unwrap();
        let scaled = sigma_reduced(&q, c).unwrap();
        assert!((scaled - t.powf(1.5) * base).abs() < 1e-12 * scaled);
    }
}

#[test]
fn lookups_outside_the_knots_miss() {
    let c = cache();
    assert!(matches!(c.reduced(0.1, 1.0), Err(Error::CacheMiss(_))));
    assert!(matches!(c.reduced(0.5, 3.5), Err(Error::CacheMiss(_))));
    let mut strict = c.clone();
    strict.interpolate = false;
    assert!(strict.reduced(0.5, 1.5).is_ok());
    assert!(matches!(strict.reduced(0.6, 1.5), Err(Error::CacheMiss(_))));
}

#[test]
fn cache_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache();
    let path = dir.path().join(format!("{}.json", c.fingerprint()));
    c.save(&path).unwrap();
    assert_eq!(&ReducedSigmaCache::load(&path).unwrap(), c);
    // A stored cache with the right key is reused as is.
    let again =
        ReducedSigmaCache::load_or_build(dir.path(), &grid(), &[0.25, 0.5, 1.0], &[0.0, 1.5, 3.0], &SolverOptions::default())
            .unwrap();
    assert_eq!(&again, c);
    assert_ne!(
        ReducedSigmaCache::key(&grid(), &[0.25, 0.5, 1.0], &[0.0, 1.5]),
        c.fingerprint()
    );
}

#[test]
fn decoupled_map_is_least_at_the_potential_minimum() {
    let c = cache();
    let v = PotentialSpec::CappedQuadratic { base: 0.6, curvature: 0.2, center: vec![0.4], cap: 0.3 };
    let w = PotentialSpec::shifted(v.clone(), 0.2);
    let g = grid();
    let ctx = SigmaContext { v: &v, w: &w, b: 0.0, cache: c, grid: &g, opts: SolverOptions::default() };
    let region = Region { lower: vec![-1.0], upper: vec![1.0] };
    let map = sigma_map(&ctx, &region, 11, &AnalyzeNodes::Nodes(vec![7])).unwrap();
    let best = &map.samples[map.argmin()];
    assert!((best.z[0] - 0.4).abs() < 1e-12);
    let rows = map.rows();
    assert_eq!(rows[7].n_ground_states, 1);
    let direct = rows[7].sigma_direct.unwrap();
    // The cache scales Γ from κ = 1; the direct solve at κ = 0.6 carries a
    // smaller O(κh²) lattice error, about 4e-5 here.
    assert!((direct - rows[7].sigma).abs() < 1e-4 * direct, "{direct} {}", rows[7].sigma);
    assert!(rows[6].sigma_direct.is_none());
    // At the minimum the gradient candidate vanishes and Σ is critical.
    let at_min = ctx.analyze(&[0.4]).unwrap();
    assert!(clarke_critical_test(&at_min).unwrap().critical);
}

fn sample(points: Vec<Vec<f64>>) -> SigmaSample {
    SigmaSample {
        z: vec![0.0; points[0].len()],
        kappa1: 1.0,
        kappa2: 1.0,
        sigma: 1.0,
        ground_states: Vec::new(),
        gradient_candidates: points,
    }
}

proptest! {
    #[test]
    fn hull_minimum_is_below_every_mixture(
        pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..5),
        raw in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let m = min_norm_in_hull(&pts);
        prop_assert!(m >= 0.0);
        let norm = |p: &[f64]| p.iter().map(|a| a * a).sum::<f64>().sqrt();
        for p in &pts {
            prop_assert!(m <= norm(p) + 1e-12);
        }
        let total: f64 = raw[..pts.len()].iter().sum();
        let mut mix = [0.0; 2];
        for (p, w) in pts.iter().zip(&raw) {
            mix[0] += w / total * p[0];
            mix[1] += w / total * p[1];
        }
        prop_assert!(m <= norm(&mix) + 1e-9);
    }

    #[test]
    fn opposite_candidates_are_critical(p in prop::collection::vec(-3.0f64..3.0, 3), t in 0.1f64..5.0) {
        let q: Vec<f64> = p.iter().map(|a| -t * a).collect();
        prop_assert!(clarke_critical_test(&sample(vec![p, q])).unwrap().critical);
    }
}
