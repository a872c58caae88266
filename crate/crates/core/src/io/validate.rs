//! Quick invariant suite behind the `validate` command. Everything runs in
//! one dimension on small grids so it finishes in seconds.

use serde::Serialize;

use crate::error::Result;
use crate::grid::{dirichlet_energy, inner, integrate, laplacian_apply, Field, Grid, State};
use crate::model::functional::{energy_frozen, nehari_value, theta_project};
use crate::model::params::FrozenParams;
use crate::model::thresholds::{h_func, local_thresholds};
use crate::par;
use crate::semiclassical::decay_fit;
use crate::sigma::{clarke_critical_test, SigmaSample};
use crate::solver::flow::{projected_flow, FlowOptions};
use crate::solver::ground_state::{
    default_seeds, pohozaev_residual, scalar_ground_state, system_ground_state, Classification,
    SolverOptions,
};
use crate::model::operator::SystemOperator;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> PropertyResult {
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    PropertyResult {
        name: name.into(),
        passed,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Interior-supported test field without symmetry.
fn bump(g: &Grid, shift: f64) -> Field {
    let l = g.half_width();
    Field::from_fn(g, |x| {
        let t = (x[0] + l) / (2.0 * l);
        (std::f64::consts::PI * t).sin().powi(2) * (1.0 + shift * x[0] + 0.1 * x[0] * x[0])
    })
}

pub fn validation_suite() -> Vec<PropertyResult> {
    let g = Grid::new(1, 20.0, 2049).expect("grid");
    let solver = SolverOptions::default();
    let seeds = default_seeds();
    let mut out = Vec::new();

    out.push(check("quadrature_linearity", || {
        let f = bump(&g, 0.3);
        let a = 1.75;
        let worst = [1u32, 2, 4]
            .iter()
            .map(|&p| Ok(rel(integrate(&f.scaled(a), p)?, a.powi(p as i32) * integrate(&f, p)?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((worst < 1e-13, format!("max relative defect {worst:e}")))
    }));

    out.push(check("laplacian_symmetry", || {
        let (f, h) = (bump(&g, 0.3), bump(&g, -0.7));
        let a = inner(&laplacian_apply(&f), &h)?;
        let b = inner(&f, &laplacian_apply(&h))?;
        Ok((rel(a, b) < 1e-12, format!("relative defect {:e}", rel(a, b))))
    }));

    out.push(check("summation_by_parts", || {
        let f = bump(&g, 0.3);
        let d = dirichlet_energy(&f);
        let e = -inner(&laplacian_apply(&f), &f)?;
        Ok((rel(d, e) < 1e-10, format!("relative defect {:e}", rel(d, e))))
    }));

    out.push(check("threshold_arithmetic", || {
        let t1 = local_thresholds(1.0, 1.0)?;
        let t2 = local_thresholds(1.0, 16.0)?;
        let ok = (h_func(1.0)? - 1.0).abs() < 1e-12
            && (h_func(4.0)? - 4.75).abs() < 1e-12
            && [t1.b_z, t1.b0, t1.b1].iter().all(|v| (v - 1.0).abs() < 1e-12)
            && (t2.b_z - 2.0).abs() < 1e-12
            && (t2.b0 - 2.0).abs() < 1e-12
            && (t2.b1 - 4.75).abs() < 1e-12;
        Ok((ok, format!("(1,16) -> ({}, {}, {})", t2.b_z, t2.b0, t2.b1)))
    }));

    out.push(check("soliton_energy", || {
        let phi = scalar_ground_state(1.0, &g)?;
        let s = State::new((*phi).clone(), Field::zeros(&g))?;
        let e = energy_frozen(&s, &FrozenParams::new(1.0, 1.0, 0.0)?)?;
        Ok(((e - 4.0 / 3.0).abs() < 1e-4, format!("energy {e}")))
    }));

    out.push(check("nehari_and_pohozaev", || {
        let p = FrozenParams::new(1.0, 1.0, 2.0)?;
        let gs = system_ground_state(&p, &g, &seeds, &solver)?;
        let n = nehari_value(&gs.state, &p)?.abs() / gs.energy;
        let poh = pohozaev_residual(&gs.state, &p)?;
        Ok((n < 1e-8 && poh < 1e-4, format!("nehari {n:e}, pohozaev {poh:e}")))
    }));

    out.push(check("vector_closed_form", || {
        let p = FrozenParams::new(1.0, 1.0, 2.0)?;
        let gs = system_ground_state(&p, &g, &seeds, &solver)?;
        let ok = gs.classification == Classification::Vector && (gs.energy - 8.0 / 9.0).abs() < 1e-4;
        Ok((ok, format!("{} energy {}", gs.classification, gs.energy)))
    }));

    out.push(check("scalar_below_threshold", || {
        let p = FrozenParams::new(1.0, 1.0, 0.5)?;
        let gs = system_ground_state(&p, &g, &seeds, &solver)?;
        let ok = gs.classification.is_scalar() && (gs.energy - 4.0 / 3.0).abs() < 1e-4;
        Ok((ok, format!("{} energy {}", gs.classification, gs.energy)))
    }));

    out.push(check("survivor_has_lower_potential", || {
        let p = FrozenParams::new(1.0, 2.0, 0.2)?;
        let gs = system_ground_state(&p, &g, &seeds, &solver)?;
        Ok((gs.classification == Classification::ScalarU, gs.classification.to_string()))
    }));

    out.push(check("scaling_law", || {
        let base = system_ground_state(&FrozenParams::new(1.0, 0.6, 2.0)?, &g, &seeds, &solver)?.energy;
        let mut worst: f64 = 0.0;
        for k in [0.5, 2.0, 4.0] {
            let scaled_grid = g.scaled(1.0 / f64::sqrt(k))?;
            let e = system_ground_state(&FrozenParams::new(k, 0.6 * k, 2.0)?, &scaled_grid, &seeds, &solver)?.energy;
            worst = worst.max(rel(e, k.powf(1.5) * base));
        }
        Ok((worst < 1e-4, format!("max relative defect {worst:e}")))
    }));

    out.push(check("swap_symmetry", || {
        let a = system_ground_state(&FrozenParams::new(1.0, 0.5, 1.5)?, &g, &seeds, &solver)?.energy;
        let b = system_ground_state(&FrozenParams::new(0.5, 1.0, 1.5)?, &g, &seeds, &solver)?.energy;
        Ok((rel(a, b) < 1e-10, format!("{a} vs {b}")))
    }));

    out.push(check("theta_projection", || {
        let p = FrozenParams::new(1.0, 1.5, 0.7)?;
        let s = State::new(bump(&g, 0.3), bump(&g, -0.2).scaled(0.5))?;
        let (_, proj) = theta_project(&s, &p)?;
        let n = nehari_value(&proj, &p)?;
        let scale = energy_frozen(&proj, &p)?.abs();
        Ok((n.abs() < 1e-10 * scale, format!("nehari value {n:e}")))
    }));

    out.push(check("flow_monotone", || {
        let p = FrozenParams::new(1.0, 1.0, 2.0)?;
        let op = SystemOperator::frozen(&g, &p);
        let s = State::new(bump(&g, 0.3), bump(&g, -0.2))?;
        let flow = projected_flow(&op, &s, &FlowOptions::default())?;
        Ok((
            flow.max_relative_increase <= 1e-12,
            format!("largest relative increase {:e}", flow.max_relative_increase),
        ))
    }));

    out.push(check("decay_fit_synthetic", || {
        let (m1, m2, eps) = (2.5, 1.3, 0.2);
        let gg = Grid::new(1, 4.0, 801)?;
        let u = Field::from_fn(&gg, |x| m1 * (-m2 * x[0].abs() / eps).exp());
        let s = State::new(u, Field::zeros(&gg))?;
        let (a, b) = decay_fit(&s, &[0.0], eps, 0.2, 2.0)?;
        Ok((rel(a, m1) < 0.01 && rel(b, m2) < 0.01, format!("mu1 {a}, mu2 {b}")))
    }));

    out.push(check("clarke_examples", || {
        let sample = |c: Vec<Vec<f64>>| SigmaSample {
            z: vec![0.0, 0.0],
            kappa1: 1.0,
            kappa2: 1.0,
            sigma: 1.0,
            ground_states: Vec::new(),
            gradient_candidates: c,
        };
        let zero = clarke_critical_test(&sample(vec![vec![0.0, 0.0]]))?;
        let single = clarke_critical_test(&sample(vec![vec![3.0, 4.0]]))?;
        let pair = clarke_critical_test(&sample(vec![vec![1.0, 2.0], vec![-1.0, -2.0]]))?;
        let ok = zero.critical && !single.critical && (single.hull_margin - 5.0).abs() < 1e-12 && pair.critical;
        Ok((ok, format!("margins {}, {}, {}", zero.hull_margin, single.hull_margin, pair.hull_margin)))
    }));

    out.push(check("parallel_matches_sequential", || {
        let p = FrozenParams::new(1.0, 1.0, 2.0)?;
        let s = State::new(bump(&g, 0.3), bump(&g, -0.2))?;
        let a = energy_frozen(&s, &p)?;
        let b = par::sequential(|| energy_frozen(&s, &p))?;
        Ok((a.to_bits() == b.to_bits(), format!("{a} vs {b}")))
    }));

    out
}
