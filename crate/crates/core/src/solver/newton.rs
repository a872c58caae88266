//! Damped Newton–Krylov refinement of the strong-form residual.

use crate::error::{Error, Result};
use crate::grid::State;
use crate::model::operator::SystemOperator;
use crate::par;
use crate::solver::krylov::{minres, KrylovOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Absolute max-norm residual target.
    pub tol: f64,
    pub inner_rtol: f64,
    pub max_iter: usize,
    pub max_inner: usize,
}

impl NewtonOptions {
    pub fn with_tol(tol: f64) -> Self {
        NewtonOptions {
            tol,
            inner_rtol: 1e-3,
            max_iter: 40,
            max_inner: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub state: State,
    pub residual_max: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
}

pub fn newton_refine(op: &SystemOperator, init: &State, opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let grid = *op.grid();
    let n = grid.len();
    let pre = op.preconditioner();
    let mut x = init.to_flat();
    let mut f = vec![0.0; 2 * n];
    op.residual_flat(&x[..n], &x[n..], &mut f);
    let mut f_norm = par::dot(&f, &f).sqrt();
    let mut f_max = par::max_abs(&f);
    let mut inner_total = 0;
    let mut delta = vec![0.0; 2 * n];
    let mut trial = vec![0.0; 2 * n];
    let mut f_trial = vec![0.0; 2 * n];

    for it in 0..=opts.max_iter {
        if std::env::var_os("CNLS_TRACE").is_some() {
            eprintln!("newton {it}: max {f_max:e} l2 {f_norm:e} inner {inner_total} n {}", grid.len());
        }
        if f_max <= opts.tol {
            return Ok(NewtonOutcome {
                state: State::from_flat(&grid, &x),
                residual_max: f_max,
                iterations: it,
                inner_iterations: inner_total,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (u, v) = x.split_at(n);
        // A rejected step is retried once with a much tighter inner solve:
        // near the rounding floor a loose Krylov direction may not reduce
        // the residual.
        let mut accepted = false;
        for rtol in [opts.inner_rtol, opts.inner_rtol * 1e-4] {
            delta.fill(0.0);
            let inner = minres(
                |d, out| op.jacobian_apply(u, v, d, out),
                |r, out| pre.apply(r, out),
                &rhs,
                &mut delta,
                KrylovOptions {
                    rtol,
                    max_iter: opts.max_inner,
                },
            )?;
            inner_total += inner.iterations;
            let mut lambda = 1.0;
            while lambda >= 1.0 / 256.0 {
                for i in 0..2 * n {
                    trial[i] = x[i] + lambda * delta[i];
                }
                op.residual_flat(&trial[..n], &trial[n..], &mut f_trial);
                let norm = par::dot(&f_trial, &f_trial).sqrt();
                if norm.is_finite() && norm < (1.0 - 1e-4 * lambda) * f_norm {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if accepted {
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut f, &mut f_trial);
            f_norm = par::dot(&f, &f).sqrt();
            f_max = par::max_abs(&f);
        } else {
            return Err(Error::NoConvergence(format!(
                "Newton line search failed at iteration {it} (residual {f_max:.3e})"
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "Newton did not reach {:.3e} in {} iterations (residual {f_max:.3e})",
        opts.tol, opts.max_iter
    )))
}
