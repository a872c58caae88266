//! Explicit coupling thresholds separating scalar from vector ground states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::potential::PotentialSpec;

/// `h(s) = min{ (s/32)(7 + 1/s²)² − 1, (s² + 3)/4 }`.
pub fn h_func(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("s", "must be positive"));
    }
    let first = s / 32.0 * (7.0 + 1.0 / (s * s)).powi(2) - 1.0;
    let second = (s * s + 3.0) / 4.0;
    Ok(first.min(second))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalThresholds {
    pub b_z: f64,
    pub b0: f64,
    pub b1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalThresholds {
    pub b0_inf: f64,
    pub b1_inf: f64,
    pub b2_inf: f64,
}

/// Thresholds for constant (frozen) potentials; `b_z` and `b₀` coincide.
pub fn local_thresholds(kappa1: f64, kappa2: f64) -> Result<LocalThresholds> {
    if !(kappa1.is_finite() && kappa1 > 0.0) {
        return Err(Error::invalid("kappa1", "must be positive"));
    }
    if !(kappa2.is_finite() && kappa2 > 0.0) {
        return Err(Error::invalid("kappa2", "must be positive"));
    }
    // Ordered so that swapping the arguments is bit-for-bit symmetric.
    let (lo, hi) = (kappa1.min(kappa2), kappa1.max(kappa2));
    let (up, down) = (hi / lo, lo / hi);
    let b0 = up.powf(0.25).max(down.powf(0.25));
    let b1 = h_func(up.sqrt())?.max(h_func(down.sqrt())?);
    Ok(LocalThresholds { b_z: b0, b0, b1 })
}

/// Global thresholds from the lower bound `α` and the sup-norms of `V`, `W`.
pub fn global_thresholds(alpha: f64, sup_v: f64, sup_w: f64) -> Result<GlobalThresholds> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    if !(alpha <= sup_v.min(sup_w)) {
        return Err(Error::invalid(
            "alpha",
            format!("must not exceed min(sup V, sup W) = {}", sup_v.min(sup_w)),
        ));
    }
    let rv = sup_v / alpha;
    let rw = sup_w / alpha;
    Ok(GlobalThresholds {
        b0_inf: rv.recip().powf(0.25).max(rw.recip().powf(0.25)),
        b1_inf: rv.powf(0.25).max(rw.powf(0.25)),
        b2_inf: h_func(rv.sqrt())?.max(h_func(rw.sqrt())?),
    })
}

/// Minima of `V` and `W` over the closed ball `B(z, r)`. The ball is sampled on
/// a lattice with `per_axis` points along each axis of the bounding cube
/// (centre included), then the best sample is polished by a pattern search
/// that stays inside the ball.
pub fn ball_minima(
    v: &PotentialSpec,
    w: &PotentialSpec,
    z: &[f64],
    r: f64,
    per_axis: usize,
) -> Result<(f64, f64)> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid("r", "must be ≥ 0"));
    }
    let per_axis = per_axis.max(1) | 1;
    let d = z.len();
    let (mut best_v, mut best_w) = ((v.eval(z), z.to_vec()), (w.eval(z), z.to_vec()));
    let total = per_axis.pow(d as u32);
    let mut x = vec![0.0; d];
    for k in 0..total {
        let mut rem = k;
        let mut r2 = 0.0;
        for a in 0..d {
            let i = rem % per_axis;
            rem /= per_axis;
            let off = if per_axis == 1 {
                0.0
            } else {
                -r + 2.0 * r * i as f64 / (per_axis - 1) as f64
            };
            x[a] = z[a] + off;
            r2 += off * off;
        }
        if r2 <= r * r * (1.0 + 1e-12) {
            let (fv, fw) = (v.eval(&x), w.eval(&x));
            if fv < best_v.0 {
                best_v = (fv, x.clone());
            }
            if fw < best_w.0 {
                best_w = (fw, x.clone());
            }
        }
    }
    let step = if per_axis > 1 { 2.0 * r / (per_axis - 1) as f64 } else { r };
    let v0 = polish(v, z, r, best_v, step);
    let w0 = polish(w, z, r, best_w, step);
    Ok((v0, w0))
}

/// Compass search for the minimum of `p` over `B(z, r)` started at `start`.
fn polish(p: &PotentialSpec, z: &[f64], r: f64, start: (f64, Vec<f64>), step: f64) -> f64 {
    let (mut f, mut x) = start;
    let mut h = step;
    let floor = 1e-12 * r.max(1.0);
    let mut trial = x.clone();
    while h > floor {
        let mut moved = false;
        for a in 0..x.len() {
            for s in [-h, h] {
                trial.copy_from_slice(&x);
                trial[a] += s;
                let r2: f64 = trial.iter().zip(z).map(|(t, c)| (t - c) * (t - c)).sum();
                if r2 > r * r {
                    let scale = r / r2.sqrt();
                    for (t, c) in trial.iter_mut().zip(z) {
                        *t = c + (*t - c) * scale;
                    }
                }
                let ft = p.eval(&trial);
                if ft < f {
                    f = ft;
                    x.copy_from_slice(&trial);
                    moved = true;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    f
}

/// Thresholds built from the ball minima `V₀`, `W₀` instead of pointwise values.
pub fn ball_thresholds(
    v: &PotentialSpec,
    w: &PotentialSpec,
    z: &[f64],
    r: f64,
    per_axis: usize,
) -> Result<LocalThresholds> {
    let (v0, w0) = ball_minima(v, w, z, r, per_axis)?;
    let mut t = local_thresholds(v0, w0)?;
    t.b_z = local_thresholds(v.eval(z), w.eval(z))?.b_z;
    Ok(t)
}
