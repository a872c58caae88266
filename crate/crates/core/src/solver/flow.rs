//! Nehari-constrained descent: Sobolev-gradient steps followed by the
//! θ-projection back onto the Nehari manifold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::State;
use crate::model::operator::SystemOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Step size in the `H¹` metric induced by the preconditioner.
    pub step: f64,
    pub min_step: f64,
    /// Stop once the energy decrease of an accepted step is below
    /// `rel_tol · energy`.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Clip negative parts after every step.
    pub clip: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            step: 0.5,
            min_step: 1e-8,
            rel_tol: 1e-10,
            max_iter: 4000,
            clip: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub state: State,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative energy increase over accepted steps (rounding only).
    pub max_relative_increase: f64,
    pub energies: Vec<f64>,
}

fn project(op: &SystemOperator, s: &State) -> Result<(State, f64)> {
    match op.project(s) {
        Ok((_, proj)) => {
            let e = op.energy(&proj)?;
            Ok((proj, e))
        }
        Err(Error::VanishingQuartic) | Err(Error::ZeroState) => Err(Error::Collapse),
        Err(e) => Err(e),
    }
}

pub fn projected_flow(op: &SystemOperator, init: &State, opts: &FlowOptions) -> Result<FlowOutcome> {
    let grid = *op.grid();
    let n = grid.len();
    let pre = op.preconditioner();
    let mut start = init.clone();
    if opts.clip {
        start.clip_negative();
    }
    let (mut state, mut energy) = project(op, &start)?;
    let mut step = opts.step;
    let mut residual = vec![0.0; 2 * n];
    let mut direction = vec![0.0; 2 * n];
    let mut energies = vec![energy];
    let mut max_increase: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        op.residual_flat(state.u.values(), state.v.values(), &mut residual);
        pre.apply(&residual, &mut direction);
        let current = state.to_flat();
        let accepted = loop {
            let trial: Vec<f64> = current
                .iter()
                .zip(&direction)
                .map(|(x, g)| x - step * g)
                .collect();
            let mut trial = State::from_flat(&grid, &trial);
            if opts.clip {
                trial.clip_negative();
            }
            let candidate = match project(op, &trial) {
                Ok(c) => Some(c),
                Err(Error::Collapse) => None,
                Err(e) => return Err(e),
            };
            match candidate {
                Some((proj, e)) if e <= energy + 1e-12 * energy.abs() => break Some((proj, e)),
                _ => {
                    step *= 0.5;
                    if step < opts.min_step {
                        break None;
                    }
                }
            }
        };
        let Some((next, e_next)) = accepted else {
            break;
        };
        iterations += 1;
        let decrease = energy - e_next;
        max_increase = max_increase.max(-decrease / energy.abs());
        state = next;
        energy = e_next;
        energies.push(energy);
        step = (step * 1.5).min(opts.step);
        if decrease.abs() < opts.rel_tol * energy.abs() {
            converged = true;
            break;
        }
    }

    Ok(FlowOutcome {
        state,
        energy,
        iterations,
        converged,
        max_relative_increase: max_increase,
        energies,
    })
}
