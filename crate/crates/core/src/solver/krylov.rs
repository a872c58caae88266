//! Preconditioned MINRES for symmetric (possibly indefinite) systems.
//!
//! The linearization of the coupled system at a mountain-pass solution has a
//! negative direction, so conjugate gradients can break down; MINRES only
//! needs symmetry of the operator and positive definiteness of the
//! preconditioner.

use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub rtol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOutcome {
    pub iterations: usize,
    /// Preconditioned residual norm relative to the right-hand side.
    pub relative_residual: f64,
}

/// Solves `A x = rhs` from `x = 0`, with `apply_a(v, out)` and
/// `apply_m(r, out)` (≈ A⁻¹, SPD) supplied by the caller.
pub fn minres<A, M>(
    apply_a: A,
    apply_m: M,
    rhs: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
) -> Result<KrylovOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    x.fill(0.0);
    let mut r1 = rhs.to_vec();
    let mut y = vec![0.0; n];
    apply_m(&r1, &mut y);
    let beta1_sq = par::dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(Error::NoConvergence("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1_sq.sqrt();
    if beta1 == 0.0 {
        return Ok(KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];

    let mut beta = beta1;
    let mut oldb = 0.0;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;

    for itn in 1..=opts.max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply_a(&v, &mut y);
        if itn >= 2 {
            par::axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = par::dot(&v, &y);
        par::axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        apply_m(&r2, &mut y);
        oldb = beta;
        let beta_sq = par::dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::NoConvergence(
                "preconditioner is not positive definite".into(),
            ));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        par::for_chunks_mut(&mut w, par::CHUNK, |start, chunk| {
            for (k, wi) in chunk.iter_mut().enumerate() {
                let i = start + k;
                *wi = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            }
        });
        par::axpy(phi, &w, x);

        let rel = phibar / beta1;
        if rel <= opts.rtol || beta == 0.0 {
            return Ok(KrylovOutcome {
                iterations: itn,
                relative_residual: rel,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "MINRES stalled after {} iterations (relative residual {:.3e})",
        opts.max_iter,
        phibar / beta1
    )))
}
