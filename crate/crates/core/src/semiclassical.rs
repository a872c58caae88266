//! ε-continuation of the full system and the concentration diagnostics:
//! location and uniqueness of the maximum, exponential decay, energy ratio,
//! the balance condition and the dichotomy verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{global_max, integrate, Field, Grid, State, MIN_POINTS};
use crate::model::operator::SystemOperator;
use crate::model::params::{FrozenParams, ModelParams};
use crate::model::thresholds::local_thresholds;
use crate::solver::flow::{projected_flow, FlowOptions};
use crate::solver::ground_state::{
    default_seeds, ground_state_set, Classification, GroundState, SolverOptions,
};
use crate::solver::newton::{newton_refine, NewtonOptions, NewtonOutcome};
use crate::sigma::GROUND_SET_TOL;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsSchedule {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EpsSchedule {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EpsSchedule::new(values)
    }
}

impl From<EpsSchedule> for Vec<f64> {
    fn from(s: EpsSchedule) -> Vec<f64> {
        s.values
    }
}

impl EpsSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("eps_schedule", "needs at least one value"));
        }
        if !(values[0] <= 1.0) || values.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("eps_schedule", "values must lie in (0, 1]"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("eps_schedule", "values must be strictly decreasing"));
        }
        Ok(EpsSchedule { values })
    }

    /// Equal geometric steps from `start` to `end`, each a factor of at
    /// least `ratio`; both ends are included exactly.
    pub fn geometric(start: f64, end: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid("eps_ratio", "must lie in (0, 1)"));
        }
        if !(end > 0.0 && end <= start) {
            return Err(Error::invalid("eps_min", "must lie in (0, eps_max]"));
        }
        let steps = ((end / start).ln() / ratio.ln() - 1e-9).ceil().max(0.0) as usize;
        let mut values: Vec<f64> = (0..steps)
            .map(|k| start * (end / start).powf(k as f64 / steps as f64))
            .collect();
        values.push(end);
        EpsSchedule::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }
}

fn smoothstep_cutoff(r: f64, r_cut: f64) -> f64 {
    let inner = 0.5 * r_cut;
    if r <= inner {
        1.0
    } else if r >= r_cut {
        0.0
    } else {
        let t = (r - inner) / inner;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

fn distance_to_boundary(z: &[f64], g: &Grid) -> f64 {
    z.iter()
        .map(|c| g.half_width() - c.abs())
        .fold(f64::INFINITY, f64::min)
}

/// `η(x)·(φ, ψ)((x − z)/ε)` with a C¹ cutoff `η` equal to 1 on
/// `|x − z| ≤ r_cut/2` and 0 beyond `r_cut`.
pub fn initial_guess(z: &[f64], eps: f64, limit: &State, r_cut: f64, g: &Grid) -> Result<State> {
    let d = g.dim();
    if z.len() != d || limit.grid().dim() != d {
        return Err(Error::invalid("z", format!("needs {d} coordinates")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    if !(r_cut > 0.0 && r_cut < distance_to_boundary(z, g)) {
        return Err(Error::invalid(
            "r_cut",
            "cutoff ball must lie strictly inside the box",
        ));
    }
    let build = |f: &Field| {
        Field::from_fn(g, |x| {
            let mut y = [0.0; 3];
            let mut r2 = 0.0;
            for a in 0..d {
                y[a] = (x[a] - z[a]) / eps;
                r2 += (x[a] - z[a]) * (x[a] - z[a]);
            }
            let eta = smoothstep_cutoff(r2.sqrt(), r_cut);
            if eta == 0.0 {
                0.0
            } else {
                eta * f.sample(&y[..d])
            }
        })
    };
    State::new(build(&limit.u), build(&limit.v))
}

#[derive(Clone, Debug)]
pub struct SepsOutcome {
    pub state: State,
    pub residual_max: f64,
    pub newton_iterations: usize,
    pub used_flow: bool,
}

/// Solves the full system from `init`; Newton first, and the projected flow
/// followed by Newton if that fails.
pub fn solve_seps(g: &Grid, p: &ModelParams, init: &State) -> Result<SepsOutcome> {
    p.validate()?;
    if init.is_zero() {
        return Err(Error::ZeroState);
    }
    let op = SystemOperator::semiclassical(g, p);
    let newton = NewtonOptions::with_tol(1e-9 * p.alpha);
    let (refined, used_flow) = match newton_refine(&op, init, &newton) {
        Ok(r) => (r, false),
        Err(Error::NoConvergence(_)) => (flow_then_newton(&op, init, &newton)?, true),
        Err(e) => return Err(e),
    };
    let mut state = refined.state;
    let lowest = state.min();
    if lowest < -1e-10 {
        return Err(Error::Negativity { value: lowest });
    }
    state.clip_negative();
    if state.max_abs() < 1e-8 {
        return Err(Error::Collapse);
    }
    Ok(SepsOutcome {
        state,
        residual_max: refined.residual_max,
        newton_iterations: refined.iterations,
        used_flow,
    })
}

/// Descends only until Newton takes over; the tight flow is the last resort.
fn flow_then_newton(op: &SystemOperator, init: &State, newton: &NewtonOptions) -> Result<NewtonOutcome> {
    let loose = FlowOptions {
        rel_tol: 1e-6,
        ..FlowOptions::default()
    };
    let flow = projected_flow(op, init, &loose)?;
    match newton_refine(op, &flow.state, newton) {
        Err(Error::NoConvergence(_)) => {
            let flow = projected_flow(op, &flow.state, &FlowOptions::default())?;
            newton_refine(op, &flow.state, newton)
        }
        r => r,
    }
}

/// Least-squares fit `log(u+v) ≈ log μ₁ − μ₂·|x − x_c|/ε` over the annulus
/// `inner_r ≤ |x − x_c| ≤ outer_r`, skipping nodes with `u+v ≤ 1e−12`.
pub fn decay_fit(s: &State, center: &[f64], eps: f64, inner_r: f64, outer_r: f64) -> Result<(f64, f64)> {
    let g = s.grid();
    let d = g.dim();
    if !(inner_r >= 0.0 && inner_r < outer_r) {
        return Err(Error::invalid("annulus", "needs 0 ≤ inner_r < outer_r"));
    }
    let (u, v) = (s.u.values(), s.v.values());
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0usize, 0.0, 0.0, 0.0, 0.0);
    for j in 0..g.len() {
        let x = g.position(j);
        let r = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        let f = u[j] + v[j];
        if r < inner_r || r > outer_r || f <= 1e-12 {
            continue;
        }
        let (t, y) = (r / eps, f.ln());
        n += 1;
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    if n < 10 {
        return Err(Error::invalid(
            "annulus",
            format!("only {n} usable nodes, need at least 10"),
        ));
    }
    let nf = n as f64;
    let denom = nf * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::invalid("annulus", "nodes share a single radius"));
    }
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    Ok((intercept.exp(), -slope))
}

/// Normalized first moments `∫(∂_jV·u² + ∂_jW·v²)`.
///
/// The normalization is `∫(u² + v²)` times the RMS gradient magnitude seen by
/// the state, `(∫(|∇V|²u² + |∇W|²v²)/∫(u² + v²))^{1/2}`, so every component lies
/// in `[−1, 1]` and vanishes when the mass sits symmetrically about a critical
/// point. The result is invariant under the rescaling `x = z + εy`, so `z` and
/// `ε` only fix the frame.
pub fn balance_residual(s: &State, p: &ModelParams, z: &[f64], eps: f64) -> Result<Vec<f64>> {
    let g = s.grid();
    let d = g.dim();
    if z.len() != d || !(eps > 0.0) {
        return Err(Error::invalid("z", format!("needs {d} coordinates and ε > 0")));
    }
    let (u, v) = (s.u.values(), s.v.values());
    let mut moment = [0.0; 3];
    let mut mass = 0.0;
    let mut grad_sq = 0.0;
    for j in 0..g.len() {
        let (u2, v2) = (u[j] * u[j], v[j] * v[j]);
        if u2 == 0.0 && v2 == 0.0 {
            continue;
        }
        let x = g.position(j);
        let gv = p.v.gradient(&x[..d]);
        let gw = p.w.gradient(&x[..d]);
        for a in 0..d {
            moment[a] += gv[a] * u2 + gw[a] * v2;
            grad_sq += gv[a] * gv[a] * u2 + gw[a] * gw[a] * v2;
        }
        mass += u2 + v2;
    }
    if mass == 0.0 {
        return Err(Error::ZeroState);
    }
    let scale = mass * (grad_sq / mass).sqrt().max(1e-12);
    Ok(moment[..d].iter().map(|m| m / scale).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ScalarLimit,
    VectorLimit,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ScalarLimit => "ScalarLimit",
            Verdict::VectorLimit => "VectorLimit",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub x_eps: Vec<f64>,
    pub gap: f64,
    pub runner_up: Option<Vec<f64>>,
    pub u_at_max: f64,
    pub v_at_max: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub energy: f64,
    pub energy_ratio: f64,
    pub balance: Vec<f64>,
    pub balance_norm: f64,
    pub profile_distance: f64,
    pub peak: f64,
    pub distance_to_ref: f64,
    pub classification: Classification,
    pub residual_max: f64,
    pub newton_iterations: usize,
    pub used_flow: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub z_ref: Vec<f64>,
    pub sigma_ref: f64,
    pub limit_classification: Classification,
    pub schedule: Vec<f64>,
    pub records: Vec<EpsRecord>,
    pub verdict: Verdict,
    /// Set when a solve failed; records stop at the last successful ε.
    pub aborted: Option<String>,
    #[serde(skip)]
    pub final_state: Option<State>,
}

impl ConcentrationReport {
    pub fn csv_header(&self) -> Vec<String> {
        let d = self.z_ref.len();
        let mut h = vec!["eps".to_string()];
        h.extend((1..=d).map(|a| format!("x_eps_{a}")));
        for c in [
            "gap",
            "u_at_max",
            "v_at_max",
            "mu1",
            "mu2",
            "energy_ratio",
            "balance_norm",
            "profile_distance",
            "verdict",
        ] {
            h.push(c.to_string());
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    /// Grid of the limit frozen problem. The default is what the ε-grid
    /// resolves around `z_ref` at the smallest ε: spacing `h/ε_min` and
    /// half-width `min(12/√κ_min, dist(z_ref, ∂box)/ε_min)`. Coarser grids
    /// can turn the discrete ground state into a lattice-pinned spike.
    pub frozen_grid: Option<Grid>,
    /// Cutoff radius of the first initial guess as a fraction of the
    /// distance from `z_ref` to the boundary.
    pub cutoff_fraction: f64,
    /// Decay-fit annulus in units of ε, clipped to the box.
    pub fit_inner: f64,
    pub fit_outer: f64,
    /// Geometric midpoints inserted before giving up on one ε.
    pub max_refinements: usize,
    pub vanish_fraction: f64,
    /// Survivor threshold in units of `√α`.
    pub survive_fraction: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            frozen_grid: None,
            cutoff_fraction: 0.9,
            fit_inner: 3.0,
            fit_outer: 10.0,
            max_refinements: 4,
            vanish_fraction: 0.05,
            survive_fraction: 0.2,
        }
    }
}

/// Frozen-frame grid with the resolution `g` has at `eps_min` (spacing
/// `h/eps_min`) and half-width `half`.
pub fn limit_grid(g: &Grid, eps_min: f64, half: f64) -> Result<Grid> {
    let n = (2.0 * half * eps_min / g.spacing()).round() as usize + 1;
    Grid::new(g.dim(), half, n.max(MIN_POINTS))
}

/// Scales the state about `center`: `new(x) = old(center + (x − center)·factor)`.
fn rescale_about(s: &State, center: &[f64], factor: f64) -> Result<State> {
    let g = *s.grid();
    let d = g.dim();
    let map = |f: &Field| {
        Field::from_fn(&g, |x| {
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = center[a] + (x[a] - center[a]) * factor;
            }
            f.sample(&y[..d]).max(0.0)
        })
    };
    State::new(map(&s.u), map(&s.v))
}

fn profile_distance(s: &State, center: &[f64], eps: f64, limit: &[GroundState]) -> f64 {
    let g = s.grid();
    let d = g.dim();
    let mut best = f64::INFINITY;
    for gs in limit {
        let mut dist: f64 = 0.0;
        for j in 0..g.len() {
            let x = g.position(j);
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = (x[a] - center[a]) / eps;
            }
            let du = s.u.values()[j] - gs.state.u.sample(&y[..d]);
            let dv = s.v.values()[j] - gs.state.v.sample(&y[..d]);
            dist = dist.max(du.abs()).max(dv.abs());
        }
        best = best.min(dist);
    }
    best
}

/// Warm-started ε-continuation with per-ε diagnostics.
pub fn continuation(
    p: &ModelParams,
    z_ref: &[f64],
    sched: &EpsSchedule,
    g: &Grid,
    opts: &ContinuationOptions,
) -> Result<ConcentrationReport> {
    p.validate()?;
    let d = g.dim();
    p.v.validate(d, "v")?;
    p.w.validate(d, "w")?;
    if z_ref.len() != d || !g.contains(z_ref) {
        return Err(Error::invalid("z_ref", "must be a point of the box"));
    }
    let frozen = p.frozen_at(z_ref)?;
    let fgrid = match opts.frozen_grid {
        Some(fg) => fg,
        None => limit_grid(
            g,
            sched.smallest(),
            (12.0 / frozen.kappa_min().sqrt()).min(distance_to_boundary(z_ref, g) / sched.smallest()),
        )?,
    };
    let limit = ground_state_set(&frozen, &fgrid, &default_seeds(), &SolverOptions::default(), GROUND_SET_TOL)
        .map_err(|e| e.context("limit ground state at z_ref"))?;
    let sigma_ref = limit[0].energy;
    let limit_classification = limit[0].classification;

    let mut pending: Vec<f64> = sched.values().to_vec();
    pending.reverse();
    let mut records: Vec<EpsRecord> = Vec::new();
    let mut schedule = Vec::new();
    let mut previous: Option<(State, f64, Vec<f64>)> = None;
    let mut aborted = None;
    let mut refinements = 0;

    while let Some(eps) = pending.pop() {
        let pe = p.with_eps(eps)?;
        let init = match &previous {
            None => {
                let r_cut = opts.cutoff_fraction * distance_to_boundary(z_ref, g);
                initial_guess(z_ref, eps, &limit[0].state, r_cut, g)?
            }
            Some((s, e_prev, x)) => rescale_about(s, x, e_prev / eps)?,
        };
        let solved = match solve_seps(g, &pe, &init) {
            Ok(s) => s,
            Err(e) => {
                if let Some((_, e_prev, _)) = &previous {
                    if refinements < opts.max_refinements {
                        refinements += 1;
                        pending.push(eps);
                        pending.push((e_prev * eps).sqrt());
                        continue;
                    }
                }
                aborted = Some(format!("ε = {eps}: {e}"));
                break;
            }
        };
        refinements = 0;
        let state = solved.state;
        let sum = Field::from_raw(
            g,
            state
                .u
                .values()
                .iter()
                .zip(state.v.values())
                .map(|(a, b)| a + b)
                .collect(),
        );
        let peak = global_max(&sum)?;
        let x_eps = peak.point.clone();
        let room = distance_to_boundary(&x_eps, g).max(0.0);
        let (mu1, mu2) = decay_fit(
            &state,
            &x_eps,
            eps,
            opts.fit_inner * eps,
            (opts.fit_outer * eps).min(room),
        )
        .unwrap_or((f64::NAN, f64::NAN));
        let op = SystemOperator::semiclassical(g, &pe);
        let energy = op.energy(&state)?;
        let balance = balance_residual(&state, &pe, &x_eps, eps)?;
        let balance_norm = balance.iter().map(|b| b * b).sum::<f64>().sqrt();
        let classification = crate::solver::ground_state::classify_state(&state, 1e-4)?;
        records.push(EpsRecord {
            eps,
            gap: peak.gap,
            runner_up: peak.runner_up.as_ref().map(|r| r.0.clone()),
            u_at_max: state.u.values()[peak.node],
            v_at_max: state.v.values()[peak.node],
            mu1,
            mu2,
            energy,
            energy_ratio: energy / (eps.powi(d as i32) * sigma_ref),
            balance,
            balance_norm,
            profile_distance: profile_distance(&state, &x_eps, eps, &limit),
            peak: peak.value,
            distance_to_ref: x_eps
                .iter()
                .zip(z_ref)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            classification,
            residual_max: solved.residual_max,
            newton_iterations: solved.newton_iterations,
            used_flow: solved.used_flow,
            x_eps: x_eps.clone(),
        });
        schedule.push(eps);
        previous = Some((state, eps, x_eps));
    }

    let verdict = verdict(&records, &frozen, p.alpha, opts);
    Ok(ConcentrationReport {
        z_ref: z_ref.to_vec(),
        sigma_ref,
        limit_classification,
        schedule,
        records,
        verdict,
        aborted,
        final_state: previous.map(|(s, _, _)| s),
    })
}

/// Dichotomy verdict from the values at the maximum over the last two ε.
pub fn verdict(records: &[EpsRecord], frozen: &FrozenParams, alpha: f64, opts: &ContinuationOptions) -> Verdict {
    if records.len() < 2 {
        return Verdict::Indeterminate;
    }
    if let Ok(t) = local_thresholds(frozen.kappa1, frozen.kappa2) {
        if frozen.b > t.b0 && frozen.b < t.b1 {
            return Verdict::Indeterminate;
        }
    }
    let tail = &records[records.len() - 2..];
    let sigma_test = opts.survive_fraction * alpha.sqrt();
    if tail.iter().all(|r| {
        let (lo, hi) = (r.u_at_max.min(r.v_at_max), r.u_at_max.max(r.v_at_max));
        lo < opts.vanish_fraction * hi
    }) {
        Verdict::ScalarLimit
    } else if tail
        .iter()
        .all(|r| r.u_at_max >= sigma_test && r.v_at_max >= sigma_test)
    {
        Verdict::VectorLimit
    } else {
        Verdict::Indeterminate
    }
}

/// Smallest ε allowed on `g`: four nodes per decay length of the stiffest
/// component, `ε ≥ 4h·√(sup V, W)` with the sup over grid nodes.
pub fn eps_floor(p: &ModelParams, g: &Grid) -> f64 {
    let sup = SystemOperator::semiclassical(g, p).max_potential();
    4.0 * g.spacing() * sup.max(0.0).sqrt()
}

/// `‖u‖₂² + ‖v‖₂²`, used by reports.
pub fn mass(s: &State) -> f64 {
    integrate(&s.u, 2).expect("p = 2") + integrate(&s.v, 2).expect("p = 2")
}
