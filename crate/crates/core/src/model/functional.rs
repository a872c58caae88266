//! Energy functionals, Nehari quantities and the θ-projection.

use crate::error::{Error, Result};
use crate::grid::State;
use crate::model::operator::SystemOperator;
use crate::model::params::{FrozenParams, ModelParams};

/// Frozen functional `I_z` with constant potentials `κ₁`, `κ₂`.
pub fn energy_frozen(s: &State, p: &FrozenParams) -> Result<f64> {
    SystemOperator::frozen(s.grid(), p).energy(s)
}

/// Full functional `J_ε` with pointwise potentials under the quadrature.
pub fn energy_eps(s: &State, p: &ModelParams) -> Result<f64> {
    SystemOperator::semiclassical(s.grid(), p).energy(s)
}

/// `⟨I_z'(u, v), (u, v)⟩`.
pub fn nehari_value(s: &State, p: &FrozenParams) -> Result<f64> {
    if s.is_zero() {
        return Err(Error::ZeroState);
    }
    Ok(SystemOperator::frozen(s.grid(), p).parts(s)?.nehari())
}

/// `θ = √(quadratic / quartic)` and the projected state `θ·(u, v)`.
pub fn theta_project(s: &State, p: &FrozenParams) -> Result<(f64, State)> {
    SystemOperator::frozen(s.grid(), p).project(s)
}

/// Strong-form residual of the full system on interior nodes.
pub fn residual(s: &State, p: &ModelParams) -> Result<State> {
    SystemOperator::semiclassical(s.grid(), p).residual(s)
}

/// Strong-form residual of the frozen system.
pub fn residual_frozen(s: &State, p: &FrozenParams) -> Result<State> {
    SystemOperator::frozen(s.grid(), p).residual(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use crate::model::potential::PotentialSpec;

    fn u0(x: f64) -> f64 {
        std::f64::consts::SQRT_2 / x.cosh()
    }

    fn fine() -> Grid {
        Grid::new(1, 20.0, 4097).unwrap()
    }

    fn soliton_state(g: &Grid, amp: f64) -> State {
        State::new(Field::from_fn(g, |x| amp * u0(x[0])), Field::zeros(g)).unwrap()
    }

    #[test]
    fn energy_of_soliton() {
        let g = fine();
        let s = soliton_state(&g, 1.0);
        for b in [0.0, 0.5, 3.0] {
            let p = FrozenParams::new(1.0, 1.0, b).unwrap();
            assert!((energy_frozen(&s, &p).unwrap() - 4.0 / 3.0).abs() < 1e-5);
        }
        let p = FrozenParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(energy_frozen(&State::zeros(&g), &p).unwrap(), 0.0);
    }

    #[test]
    fn energy_scales_with_kappa() {
        let g = fine();
        let kappa: f64 = 2.25;
        let s = State::new(
            Field::from_fn(&g, |x| kappa.sqrt() * u0(kappa.sqrt() * x[0])),
            Field::zeros(&g),
        )
        .unwrap();
        let p = FrozenParams::new(kappa, 1.0, 0.0).unwrap();
        let expected = kappa.powf(1.5) * 4.0 / 3.0;
        assert!((energy_frozen(&s, &p).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn nehari_of_doubled_soliton() {
        let g = fine();
        let s = soliton_state(&g, 2.0);
        let p = FrozenParams::new(1.0, 1.0, 1.0).unwrap();
        // 4·A − 16·B with A = B = 16/3.
        assert!((nehari_value(&s, &p).unwrap() + 64.0).abs() < 1e-4);
        assert!(matches!(
            nehari_value(&State::zeros(&g), &p),
            Err(Error::ZeroState)
        ));
    }

    #[test]
    fn theta_projection() {
        let g = fine();
        let p = FrozenParams::new(1.0, 1.0, 1.0).unwrap();
        let (theta, proj) = theta_project(&soliton_state(&g, 2.0), &p).unwrap();
        assert!((theta - 0.5).abs() < 1e-6);
        let (again, _) = theta_project(&proj, &p).unwrap();
        assert!((again - 1.0).abs() < 1e-12);
        assert!(nehari_value(&proj, &p).unwrap().abs() < 1e-10);
        assert!(theta_project(&State::zeros(&g), &p).is_err());
    }

    #[test]
    fn projected_energy_is_the_ray_maximum() {
        let g = Grid::new(1, 10.0, 401).unwrap();
        let p = FrozenParams::new(1.3, 0.7, 1.4).unwrap();
        let s = State::new(
            Field::from_fn(&g, |x| (-(x[0] - 0.4).powi(2)).exp()),
            Field::from_fn(&g, |x| 0.6 * (-(x[0] + 0.9).powi(2) / 2.0).exp()),
        )
        .unwrap();
        let (theta, proj) = theta_project(&s, &p).unwrap();
        let top = energy_frozen(&proj, &p).unwrap();
        for k in 0..=600 {
            let t = 3.0 * theta * k as f64 / 600.0;
            let e = energy_frozen(&s.scaled(t), &p).unwrap();
            assert!(e <= top * (1.0 + 1e-6));
        }
    }

    #[test]
    fn residual_of_exact_soliton_is_second_order() {
        let p = ModelParams::new(
            PotentialSpec::constant(1.0),
            PotentialSpec::constant(1.0),
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let mut errors = Vec::new();
        for n in [1025, 2049] {
            let g = Grid::new(1, 20.0, n).unwrap();
            let r = residual(&soliton_state(&g, 1.0), &p).unwrap();
            errors.push(r.max_abs());
            assert!(r.max_abs() < g.spacing().powi(2));
        }
        let ratio = errors[0] / errors[1];
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
        assert!(residual(&State::zeros(&fine()), &p).unwrap().is_zero());
    }

    #[test]
    fn constant_potentials_match_frozen_energy() {
        let g = Grid::new(2, 6.0, 33).unwrap();
        let s = State::new(
            Field::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()),
            Field::from_fn(&g, |x| 0.5 * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()),
        )
        .unwrap();
        let fp = FrozenParams::new(1.2, 0.8, 0.6).unwrap();
        let mp = ModelParams::new(
            PotentialSpec::constant(1.2),
            PotentialSpec::constant(0.8),
            0.6,
            1.0,
            0.8,
        )
        .unwrap();
        assert_eq!(
            energy_frozen(&s, &fp).unwrap(),
            energy_eps(&s, &mp).unwrap()
        );
    }
}
