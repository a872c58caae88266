//! Least-energy solutions of the frozen system and their classification.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, integrate, Field, Grid, State};
use crate::model::operator::SystemOperator;
use crate::model::params::FrozenParams;
use crate::par;
use crate::solver::flow::{projected_flow, FlowOptions};
use crate::solver::newton::{newton_refine, NewtonOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    ScalarU,
    ScalarV,
    Vector,
}

impl Classification {
    pub fn is_scalar(self) -> bool {
        !matches!(self, Classification::Vector)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::ScalarU => "scalar_u",
            Classification::ScalarV => "scalar_v",
            Classification::Vector => "vector",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeedKind {
    ScalarU,
    ScalarV,
    SymmetricVector,
    AsymmetricVector { ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeed", into = "RawSeed")]
pub struct SeedSpec {
    pub kind: SeedKind,
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    ScalarU,
    ScalarV,
    SymmetricVector,
    AsymmetricVector,
}

/// Flat JSON form `{"kind": …, "ratio": …, "amplitude": …}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeed {
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(default = "unit")]
    amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<RawSeed> for SeedSpec {
    type Error = Error;

    fn try_from(raw: RawSeed) -> Result<Self> {
        let kind = match (raw.kind, raw.ratio) {
            (RawKind::ScalarU, None) => SeedKind::ScalarU,
            (RawKind::ScalarV, None) => SeedKind::ScalarV,
            (RawKind::SymmetricVector, None) => SeedKind::SymmetricVector,
            (RawKind::AsymmetricVector, Some(ratio)) => SeedKind::AsymmetricVector { ratio },
            (RawKind::AsymmetricVector, None) => {
                return Err(Error::invalid("seed.ratio", "required for asymmetric_vector"))
            }
            (_, Some(_)) => {
                return Err(Error::invalid("seed.ratio", "only valid for asymmetric_vector"))
            }
        };
        let spec = SeedSpec {
            kind,
            amplitude: raw.amplitude,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<SeedSpec> for RawSeed {
    fn from(s: SeedSpec) -> RawSeed {
        let (kind, ratio) = match s.kind {
            SeedKind::ScalarU => (RawKind::ScalarU, None),
            SeedKind::ScalarV => (RawKind::ScalarV, None),
            SeedKind::SymmetricVector => (RawKind::SymmetricVector, None),
            SeedKind::AsymmetricVector { ratio } => (RawKind::AsymmetricVector, Some(ratio)),
        };
        RawSeed {
            kind,
            ratio,
            amplitude: s.amplitude,
        }
    }
}

impl SeedSpec {
    pub fn new(kind: SeedKind) -> Self {
        SeedSpec {
            kind,
            amplitude: 1.0,
        }
    }

    pub fn id(&self) -> String {
        match self.kind {
            SeedKind::ScalarU => "scalar_u".into(),
            SeedKind::ScalarV => "scalar_v".into(),
            SeedKind::SymmetricVector => "symmetric_vector".into(),
            SeedKind::AsymmetricVector { ratio } => format!("asymmetric_vector_{ratio}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::invalid("seed.amplitude", "must be positive"));
        }
        if let SeedKind::AsymmetricVector { ratio } = self.kind {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::invalid("seed.ratio", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Both scalar basins, the symmetric vector basin and a 2:1 vector seed.
pub fn default_seeds() -> Vec<SeedSpec> {
    vec![
        SeedSpec::new(SeedKind::ScalarU),
        SeedSpec::new(SeedKind::ScalarV),
        SeedSpec::new(SeedKind::SymmetricVector),
        SeedSpec::new(SeedKind::AsymmetricVector { ratio: 2.0 }),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub flow: FlowOptions,
    /// Relative sup-norm below which a component counts as vanished.
    pub classify_tol: f64,
    /// Newton stops at `el_residual ≤ newton_rel_tol·(κ₁ + κ₂)`.
    pub newton_rel_tol: f64,
    pub negativity_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            flow: FlowOptions::default(),
            classify_tol: 1e-4,
            newton_rel_tol: 1e-9,
            negativity_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: State,
    pub params: FrozenParams,
    pub energy: f64,
    /// `|⟨I'(u,v),(u,v)⟩|`.
    pub nehari_residual: f64,
    /// Max-norm of the strong-form residual.
    pub el_residual: f64,
    pub classification: Classification,
    pub sup_u: f64,
    pub sup_v: f64,
    pub seed_id: String,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub energy: f64,
    pub nehari_residual: f64,
    pub el_residual: f64,
    pub classification: Classification,
    pub sup_u: f64,
    pub sup_v: f64,
    pub seed_id: String,
    pub norm_u_sq: f64,
    pub norm_v_sq: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub b: f64,
}

impl GroundState {
    /// `(‖φ‖₂², ‖ψ‖₂²)`.
    pub fn l2_norms_sq(&self) -> (f64, f64) {
        (
            integrate(&self.state.u, 2).expect("p = 2"),
            integrate(&self.state.v, 2).expect("p = 2"),
        )
    }

    pub fn summary(&self) -> GroundStateSummary {
        let (nu, nv) = self.l2_norms_sq();
        GroundStateSummary {
            energy: self.energy,
            nehari_residual: self.nehari_residual,
            el_residual: self.el_residual,
            classification: self.classification,
            sup_u: self.sup_u,
            sup_v: self.sup_v,
            seed_id: self.seed_id.clone(),
            norm_u_sq: nu,
            norm_v_sq: nv,
            kappa1: self.params.kappa1,
            kappa2: self.params.kappa2,
            b: self.params.b,
        }
    }
}

pub fn classify_state(s: &State, tol: f64) -> Result<Classification> {
    if s.is_zero() {
        return Err(Error::ZeroState);
    }
    let su = s.u.sup().max(0.0);
    let sv = s.v.sup().max(0.0);
    let top = su.max(sv);
    Ok(if sv <= tol * top {
        Classification::ScalarU
    } else if su <= tol * top {
        Classification::ScalarV
    } else {
        Classification::Vector
    })
}

/// Normalized Pohozaev defect
/// `|(d−2)/2·(D(u)+D(v)) + d/2·(κ₁‖u‖²+κ₂‖v‖²) − d∫F(u,v)|` over the quadratic
/// energy scale.
pub fn pohozaev_residual(s: &State, p: &FrozenParams) -> Result<f64> {
    let op = SystemOperator::frozen(s.grid(), p);
    let parts = op.parts(s)?;
    let d = s.grid().dim() as f64;
    let kinetic = parts.kinetic_u + parts.kinetic_v;
    let potential = parts.potential_u + parts.potential_v;
    let defect = 0.5 * (d - 2.0) * kinetic + 0.5 * d * potential - 0.25 * d * parts.quartic();
    let scale = parts.quadratic();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(defect.abs() / scale)
}

type ProfileKey = (String, u64);

fn profile_cache() -> &'static Mutex<HashMap<ProfileKey, Arc<Field>>> {
    static CACHE: OnceLock<Mutex<HashMap<ProfileKey, Arc<Field>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Positive radial solution of `−Δu + κu = u³` on `grid`.
///
/// The unit profile `U₀` is solved on the grid scaled by `√κ`, so the result
/// `√κ·U₀(√κ·x)` is the exact discrete solution on `grid` without
/// interpolation.
pub fn scalar_ground_state(kappa: f64, grid: &Grid) -> Result<Arc<Field>> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let key = (grid.fingerprint(), kappa.to_bits());
    if let Some(hit) = profile_cache().lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let root = kappa.sqrt();
    let unit_grid = grid.scaled(root)?;
    let profile = unit_profile(&unit_grid)?;
    let field = Arc::new(Field::from_raw(
        grid,
        profile.values().iter().map(|v| root * v).collect(),
    ));
    profile_cache()
        .lock()
        .expect("cache lock")
        .entry(key)
        .or_insert_with(|| field.clone());
    Ok(field)
}

fn unit_profile(grid: &Grid) -> Result<Field> {
    let p = FrozenParams::new(1.0, 1.0, 0.0)?;
    let op = SystemOperator::frozen(grid, &p);
    let seed = Field::from_fn(grid, |x| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        std::f64::consts::SQRT_2 / r.cosh()
    });
    let init = State::new(seed, Field::zeros(grid))?;
    let flow = projected_flow(&op, &init, &FlowOptions::default())?;
    let tol = SolverOptions::default().newton_rel_tol * 2.0;
    let refined = newton_refine(&op, &flow.state, &NewtonOptions::with_tol(tol))
        .map_err(|e| e.context("unit soliton profile"))?;
    let mut u = refined.state.u;
    if u.min() < -1e-10 {
        return Err(Error::Negativity { value: u.min() });
    }
    for v in u.values_mut() {
        *v = v.max(0.0);
    }
    Ok(u)
}

fn seed_state(p: &FrozenParams, grid: &Grid, seed: &SeedSpec) -> Result<State> {
    let phi1 = scalar_ground_state(p.kappa1, grid)?;
    let phi2 = scalar_ground_state(p.kappa2, grid)?;
    let a = seed.amplitude;
    let damp = 1.0 / (1.0 + p.b).sqrt();
    let (cu, cv) = match seed.kind {
        SeedKind::ScalarU => (a, 0.0),
        SeedKind::ScalarV => (0.0, a),
        SeedKind::SymmetricVector => (a * damp, a * damp),
        SeedKind::AsymmetricVector { ratio } => (a * damp * ratio, a * damp),
    };
    State::new(phi1.scaled(cu), phi2.scaled(cv))
}

/// Runs one seed through the projected flow and Newton refinement.
pub fn solve_seed(
    p: &FrozenParams,
    grid: &Grid,
    seed: &SeedSpec,
    opts: &SolverOptions,
) -> Result<GroundState> {
    seed.validate()?;
    let op = SystemOperator::frozen(grid, p);
    let init = seed_state(p, grid, seed)?;
    let flow = projected_flow(&op, &init, &opts.flow)?;
    let tol = opts.newton_rel_tol * (p.kappa1 + p.kappa2);
    let refined = newton_refine(&op, &flow.state, &NewtonOptions::with_tol(tol))?;
    let mut state = refined.state;
    let lowest = state.min();
    if lowest < -opts.negativity_tol {
        return Err(Error::Negativity { value: lowest });
    }
    state.clip_negative();
    if state.max_abs() < 1e-8 {
        return Err(Error::Collapse);
    }
    let parts = op.parts(&state)?;
    let el_residual = op.residual(&state)?.max_abs();
    Ok(GroundState {
        classification: classify_state(&state, opts.classify_tol)?,
        sup_u: state.u.sup(),
        sup_v: state.v.sup(),
        energy: parts.energy(),
        nehari_residual: parts.nehari().abs(),
        el_residual,
        params: *p,
        state,
        seed_id: seed.id(),
        flow_iterations: flow.iterations,
        newton_iterations: refined.iterations,
    })
}

/// Every seed's outcome, in seed order.
pub fn solve_seeds(
    p: &FrozenParams,
    grid: &Grid,
    seeds: &[SeedSpec],
    opts: &SolverOptions,
) -> Vec<Result<GroundState>> {
    // Fill the profile cache before fanning out.
    let _ = scalar_ground_state(p.kappa1, grid);
    let _ = scalar_ground_state(p.kappa2, grid);
    par::map(seeds, |s| solve_seed(p, grid, s, opts))
}

fn converged(
    p: &FrozenParams,
    grid: &Grid,
    seeds: &[SeedSpec],
    opts: &SolverOptions,
) -> Result<Vec<GroundState>> {
    p.validate()?;
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "at least one seed is required"));
    }
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (seed, out) in seeds.iter().zip(solve_seeds(p, grid, seeds, opts)) {
        match out {
            Ok(gs) => ok.push(gs),
            Err(Error::Collapse) => {
                return Err(Error::Collapse.context(format!("seed {}", seed.id())))
            }
            Err(e) => failures.push(format!("{}: {e}", seed.id())),
        }
    }
    if ok.is_empty() {
        return Err(Error::NoConvergence(format!(
            "all seeds failed ({})",
            failures.join("; ")
        )));
    }
    Ok(ok)
}

/// Converged candidate of least energy; ties go to the earlier seed.
pub fn system_ground_state(
    p: &FrozenParams,
    grid: &Grid,
    seeds: &[SeedSpec],
    opts: &SolverOptions,
) -> Result<GroundState> {
    let all = converged(p, grid, seeds, opts)?;
    let mut best = 0;
    for (i, gs) in all.iter().enumerate() {
        if gs.energy < all[best].energy {
            best = i;
        }
    }
    Ok(all.into_iter().nth(best).expect("non-empty"))
}

/// Distinct converged candidates whose energy is within `rel_tol` of the
/// least one: the sampled set of ground states.
pub fn ground_state_set(
    p: &FrozenParams,
    grid: &Grid,
    seeds: &[SeedSpec],
    opts: &SolverOptions,
    rel_tol: f64,
) -> Result<Vec<GroundState>> {
    let all = converged(p, grid, seeds, opts)?;
    let least = all.iter().map(|g| g.energy).fold(f64::INFINITY, f64::min);
    let mut set: Vec<GroundState> = Vec::new();
    for gs in all {
        if gs.energy > least + rel_tol * least.abs() {
            continue;
        }
        let scale = gs.state.max_abs().max(1e-300);
        let duplicate = set.iter().any(|other| {
            let du = other
                .state
                .u
                .values()
                .iter()
                .zip(gs.state.u.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let dv = other
                .state
                .v
                .values()
                .iter()
                .zip(gs.state.v.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            du.max(dv) <= 1e-6 * scale
        });
        if !duplicate {
            set.push(gs);
        }
    }
    Ok(set)
}

/// Kinetic energy `D(u) + D(v)`; exposed for diagnostics.
pub fn kinetic_energy(s: &State) -> f64 {
    dirichlet_energy(&s.u) + dirichlet_energy(&s.v)
}
