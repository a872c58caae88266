//! The ground energy map `Σ(z)`, its reduction to `c(1, ω², b)`, one-sided
//! directional derivatives and the Clarke criticality test.
//!
//! Under `x ↦ √κ_max·x` the frozen energy scales as `κ_max^{(4−d)/2}`, so
//! `Σ(z) = κ_max^{(4−d)/2}·c(1, ω², b)` with `ω² = κ_min/κ_max`. The cache
//! keeps the scalar branch in closed form (`c = Γ_d·ω^{4−d}`) and tabulates
//! the vector branch on knots; lookups take the smaller of the two, which keeps
//! the branch switch exact instead of smearing it across a knot cell.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_DIM};
use crate::model::params::FrozenParams;
use crate::model::potential::PotentialSpec;
use crate::par;
use crate::solver::ground_state::{
    default_seeds, ground_state_set, solve_seeds, system_ground_state, Classification,
    GroundState, GroundStateSummary, SolverOptions,
};

/// `ω²` knots `0.1, 0.2, …, 1`.
pub fn default_omega_sq() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}
const CACHE_VERSION: u32 = 2;

/// Least energy of the frozen system with the default seed set.
pub fn sigma_frozen(p: &FrozenParams, g: &Grid) -> Result<f64> {
    Ok(system_ground_state(p, g, &default_seeds(), &SolverOptions::default())?.energy)
}

fn scaling_exponent(dim: usize) -> f64 {
    (4.0 - dim as f64) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSigmaCache {
    pub version: u32,
    /// Reference grid of the reduced solves (`κ_max = 1`).
    pub grid: Grid,
    pub omega_sq: Vec<f64>,
    pub b: Vec<f64>,
    /// Scalar ground energy at `κ = 1` on the reference grid.
    pub gamma: f64,
    /// `vector[i][k]`: least energy over vector-classified outcomes at
    /// `(b[i], omega_sq[k])`. Knots without a vector outcome hold the branch
    /// extended from the two nearest vector knots of the same `ω²` column
    /// (linear in `ln(1+b)` on `ln c`), or the ground energy when the column
    /// has fewer than two.
    pub vector: Vec<Vec<f64>>,
    /// Whether a seed stayed vector at the knot.
    pub vector_found: Vec<Vec<bool>>,
    /// `ground[i][k]`: least energy over all seeds.
    pub ground: Vec<Vec<f64>>,
    /// Off-knot lookups interpolate when set, otherwise they are cache misses.
    pub interpolate: bool,
}

fn check_knots(name: &str, knots: &[f64], lower: f64) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::invalid(name, "needs at least one knot"));
    }
    if knots.iter().any(|k| !(k.is_finite() && *k >= lower)) {
        return Err(Error::invalid(name, format!("knots must be finite and ≥ {lower}")));
    }
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "knots must be strictly increasing"));
    }
    Ok(())
}

/// Bracketing knots and the weight of the upper one.
fn bracket(knots: &[f64], x: f64, coord: impl Fn(f64) -> f64) -> Option<(usize, usize, f64)> {
    let last = knots.len() - 1;
    if let Some(k) = knots.iter().position(|&k| k == x) {
        return Some((k, k, 0.0));
    }
    if x < knots[0] || x > knots[last] {
        return None;
    }
    let hi = knots.iter().position(|&k| k > x)?;
    let lo = hi - 1;
    let t = (coord(x) - coord(knots[lo])) / (coord(knots[hi]) - coord(knots[lo]));
    Some((lo, hi, t))
}

/// Fills knots without a vector outcome so that interpolation never cuts
/// across the kink where the vector branch leaves the scalar one.
fn extend_vector_branch(b: &[f64], vector: &[Vec<Option<f64>>], ground: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let x: Vec<f64> = b.iter().map(|v| v.ln_1p()).collect();
    let mut out: Vec<Vec<f64>> = ground.to_vec();
    for k in 0..ground.first().map_or(0, Vec::len) {
        let found: Vec<usize> = (0..b.len()).filter(|&i| vector[i][k].is_some()).collect();
        for i in 0..b.len() {
            if let Some(v) = vector[i][k] {
                out[i][k] = v;
                continue;
            }
            if found.len() < 2 {
                continue;
            }
            let mut near = found.clone();
            near.sort_by(|&p, &q| (x[p] - x[i]).abs().total_cmp(&(x[q] - x[i]).abs()).then(p.cmp(&q)));
            let (p, q) = (near[0], near[1]);
            let (yp, yq) = (vector[p][k].unwrap().ln(), vector[q][k].unwrap().ln());
            let slope = (yq - yp) / (x[q] - x[p]);
            out[i][k] = (yp + slope * (x[i] - x[p])).exp();
        }
    }
    out
}

impl ReducedSigmaCache {
    /// Solves the reduced system at every `(b, ω²)` knot on `grid`.
    pub fn build(grid: &Grid, omega_sq: &[f64], b: &[f64], opts: &SolverOptions) -> Result<Self> {
        check_knots("omega_sq", omega_sq, f64::MIN_POSITIVE)?;
        if omega_sq.iter().any(|&w| w > 1.0) {
            return Err(Error::invalid("omega_sq", "knots must lie in (0, 1]"));
        }
        check_knots("b", b, 0.0)?;
        let unit = FrozenParams::new(1.0, 1.0, 0.0)?;
        let gamma = system_ground_state(
            &unit,
            grid,
            &[crate::solver::ground_state::SeedSpec::new(
                crate::solver::ground_state::SeedKind::ScalarU,
            )],
            opts,
        )?
        .energy;
        let points: Vec<(f64, f64)> = b
            .iter()
            .flat_map(|&bb| omega_sq.iter().map(move |&w| (bb, w)))
            .collect();
        let seeds = default_seeds();
        let solved = par::map(&points, |&(bb, w)| -> Result<(f64, Option<f64>)> {
            let p = FrozenParams::new(1.0, w, bb)?;
            let outcomes = solve_seeds(&p, grid, &seeds, opts);
            let mut ground = f64::INFINITY;
            let mut vector = f64::INFINITY;
            let mut failures = Vec::new();
            for out in outcomes {
                match out {
                    Ok(gs) => {
                        ground = ground.min(gs.energy);
                        if gs.classification == Classification::Vector {
                            vector = vector.min(gs.energy);
                        }
                    }
                    Err(e) => failures.push(e.to_string()),
                }
            }
            if !ground.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "reduced solve at ω² = {w}, b = {bb}: {}",
                    failures.join("; ")
                )));
            }
            Ok((ground, vector.is_finite().then_some(vector)))
        });
        let mut ground = vec![vec![0.0; omega_sq.len()]; b.len()];
        let mut vector = vec![vec![None; omega_sq.len()]; b.len()];
        for (i, out) in solved.into_iter().enumerate() {
            let (gr, vec) = out?;
            ground[i / omega_sq.len()][i % omega_sq.len()] = gr;
            vector[i / omega_sq.len()][i % omega_sq.len()] = vec;
        }
        let vector_found = vector
            .iter()
            .map(|row| row.iter().map(Option::is_some).collect())
            .collect();
        let vector = extend_vector_branch(b, &vector, &ground);
        Ok(ReducedSigmaCache {
            version: CACHE_VERSION,
            grid: *grid,
            omega_sq: omega_sq.to_vec(),
            b: b.to_vec(),
            gamma,
            vector,
            vector_found,
            ground,
            interpolate: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// File-name friendly key: reference grid plus knot sets.
    pub fn key(grid: &Grid, omega_sq: &[f64], b: &[f64]) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for v in omega_sq.iter().chain(b) {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
            hash ^= 0xff;
        }
        format!("sigma-{}-{hash:016x}", grid.fingerprint())
    }

    pub fn fingerprint(&self) -> String {
        Self::key(&self.grid, &self.omega_sq, &self.b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        crate::io::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cache: ReducedSigmaCache = serde_json::from_str(&text)?;
        if cache.version != CACHE_VERSION {
            return Err(Error::CacheMiss(format!(
                "{} has version {}, expected {CACHE_VERSION}",
                path.display(),
                cache.version
            )));
        }
        Ok(cache)
    }

    /// Loads `dir/<key>.json` when present, otherwise builds and stores it.
    pub fn load_or_build(
        dir: &Path,
        grid: &Grid,
        omega_sq: &[f64],
        b: &[f64],
        opts: &SolverOptions,
    ) -> Result<Self> {
        let path = dir.join(format!("{}.json", Self::key(grid, omega_sq, b)));
        if path.exists() {
            if let Ok(cache) = Self::load(&path) {
                if cache.grid == *grid && cache.omega_sq == omega_sq && cache.b == b {
                    return Ok(cache);
                }
            }
        }
        let cache = Self::build(grid, omega_sq, b, opts)?;
        std::fs::create_dir_all(dir)?;
        cache.save(&path)?;
        Ok(cache)
    }

    /// Closed-form scalar branch `Γ_d·(ω²)^{(4−d)/2}`.
    pub fn scalar_branch(&self, omega_sq: f64) -> f64 {
        self.gamma * omega_sq.powf(scaling_exponent(self.dim()))
    }

    /// `c(1, ω², b)`.
    pub fn reduced(&self, omega_sq: f64, b: f64) -> Result<f64> {
        let miss = || {
            Error::CacheMiss(format!(
                "(ω², b) = ({omega_sq}, {b}) outside the cached knots"
            ))
        };
        let (w0, w1, tw) = bracket(&self.omega_sq, omega_sq, f64::ln).ok_or_else(miss)?;
        let (b0, b1, tb) = bracket(&self.b, b, f64::ln_1p).ok_or_else(miss)?;
        let on_knot = tw == 0.0 && tb == 0.0;
        if !on_knot && !self.interpolate {
            return Err(miss());
        }
        // Bilinear in (ln ω², ln(1+b)) on ln c: the scalar branch is exactly
        // linear there and the symmetric vector branch 2Γ/(1+b) is too.
        let at = |i: usize, k: usize| self.vector[i][k].ln();
        let lo = (1.0 - tw) * at(b0, w0) + tw * at(b0, w1);
        let hi = (1.0 - tw) * at(b1, w0) + tw * at(b1, w1);
        let vector = ((1.0 - tb) * lo + tb * hi).exp();
        Ok(vector.min(self.scalar_branch(omega_sq)))
    }
}

/// `Σ = κ_max^{(4−d)/2}·c(1, ω², b)`; symmetric under the component swap.
pub fn sigma_reduced(p: &FrozenParams, cache: &ReducedSigmaCache) -> Result<f64> {
    p.validate()?;
    let kmax = p.kappa_max();
    let omega_sq = p.kappa_min() / kmax;
    Ok(kmax.powf(scaling_exponent(cache.dim())) * cache.reduced(omega_sq, p.b)?)
}

/// Axis-aligned box sampled with `res` nodes per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::invalid("region", format!("needs {dim} coordinates per corner")));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::invalid("region", "lower corner must not exceed upper"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Node coordinates in row-major order.
    pub fn nodes(&self, res: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let coord = |axis: usize, i: usize| {
            if res == 1 {
                0.5 * (self.lower[axis] + self.upper[axis])
            } else {
                let t = i as f64 / (res - 1) as f64;
                self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
            }
        };
        (0..res.pow(d as u32))
            .map(|flat| {
                let mut rem = flat;
                let mut idx = [0usize; MAX_DIM];
                for axis in (0..d).rev() {
                    idx[axis] = rem % res;
                    rem /= res;
                }
                (0..d).map(|a| coord(a, idx[a])).collect()
            })
            .collect()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }
}

#[derive(Clone, Debug)]
pub struct SigmaSample {
    pub z: Vec<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub sigma: f64,
    /// Sampled ground-state set; empty at nodes not flagged for analysis.
    pub ground_states: Vec<GroundStateSummary>,
    pub gradient_candidates: Vec<Vec<f64>>,
}

impl SigmaSample {
    pub fn analyzed(&self) -> bool {
        !self.ground_states.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SigmaMap {
    pub region: Region,
    pub resolution: usize,
    pub samples: Vec<SigmaSample>,
}

/// Which map nodes get a ground-state set and gradient candidates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzeNodes {
    #[default]
    None,
    All,
    Nodes(Vec<usize>),
}

impl AnalyzeNodes {
    fn contains(&self, k: usize) -> bool {
        match self {
            AnalyzeNodes::None => false,
            AnalyzeNodes::All => true,
            AnalyzeNodes::Nodes(list) => list.contains(&k),
        }
    }
}

/// Relative energy window defining the sampled ground-state set.
pub const GROUND_SET_TOL: f64 = 1e-7;

/// `½(∇V(z)‖φ‖₂² + ∇W(z)‖ψ‖₂²)` for one ground state.
pub fn gradient_candidate(v: &PotentialSpec, w: &PotentialSpec, z: &[f64], gs: &GroundStateSummary) -> Vec<f64> {
    let gv = v.gradient(z);
    let gw = w.gradient(z);
    (0..z.len())
        .map(|a| 0.5 * (gv[a] * gs.norm_u_sq + gw[a] * gs.norm_v_sq))
        .collect()
}

/// Everything needed to evaluate `Σ` and its derivative data at a point.
#[derive(Clone, Debug)]
pub struct SigmaContext<'a> {
    pub v: &'a PotentialSpec,
    pub w: &'a PotentialSpec,
    pub b: f64,
    pub cache: &'a ReducedSigmaCache,
    /// Grid for the direct ground-state solves at analyzed nodes.
    pub grid: &'a Grid,
    pub opts: SolverOptions,
}

impl SigmaContext<'_> {
    pub fn frozen(&self, z: &[f64]) -> Result<FrozenParams> {
        FrozenParams::new(self.v.eval(z), self.w.eval(z), self.b)
    }

    pub fn sigma(&self, z: &[f64]) -> Result<f64> {
        sigma_reduced(&self.frozen(z)?, self.cache)
    }

    pub fn ground_states(&self, p: &FrozenParams) -> Result<Vec<GroundState>> {
        ground_state_set(p, self.grid, &default_seeds(), &self.opts, GROUND_SET_TOL)
    }

    /// Sample at `z` with its ground-state set and gradient candidates.
    pub fn analyze(&self, z: &[f64]) -> Result<SigmaSample> {
        let p = self.frozen(z)?;
        let set = self.ground_states(&p)?;
        self.sample_from(z, &p, &set.iter().map(|g| g.summary()).collect::<Vec<_>>())
    }

    fn sample_from(&self, z: &[f64], p: &FrozenParams, set: &[GroundStateSummary]) -> Result<SigmaSample> {
        Ok(SigmaSample {
            z: z.to_vec(),
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            sigma: sigma_reduced(p, self.cache)?,
            gradient_candidates: set
                .iter()
                .map(|gs| gradient_candidate(self.v, self.w, z, gs))
                .collect(),
            ground_states: set.to_vec(),
        })
    }
}

/// `Σ` on every region node via the reduced cache. Ground-state sets at the
/// flagged nodes are solved directly and shared between nodes with the same
/// frozen parameters.
pub fn sigma_map(ctx: &SigmaContext<'_>, region: &Region, res: usize, analyze: &AnalyzeNodes) -> Result<SigmaMap> {
    let d = ctx.cache.dim();
    region.validate(d)?;
    ctx.v.validate(d, "v")?;
    ctx.w.validate(d, "w")?;
    if res == 0 {
        return Err(Error::invalid("resolution", "must be ≥ 1"));
    }
    let nodes = region.nodes(res);
    let params: Vec<FrozenParams> = nodes.iter().map(|z| ctx.frozen(z)).collect::<Result<_>>()?;

    // Distinct frozen parameter triples among flagged nodes, in node order.
    let mut distinct: Vec<FrozenParams> = Vec::new();
    let key = |p: &FrozenParams| (p.kappa1.to_bits(), p.kappa2.to_bits(), p.b.to_bits());
    for (k, p) in params.iter().enumerate() {
        if analyze.contains(k) && !distinct.iter().any(|q| key(q) == key(p)) {
            distinct.push(*p);
        }
    }
    let memo: Mutex<HashMap<(u64, u64, u64), Vec<GroundStateSummary>>> = Mutex::new(HashMap::new());
    let solved = par::map(&distinct, |p| {
        ctx.ground_states(p)
            .map(|set| set.iter().map(|g| g.summary()).collect::<Vec<_>>())
            .map_err(|e| e.context(format!("ground states at κ = ({}, {})", p.kappa1, p.kappa2)))
    });
    for (p, set) in distinct.iter().zip(solved) {
        memo.lock().expect("memo lock").insert(key(p), set?);
    }
    let memo = memo.into_inner().expect("memo lock");
    let empty = Vec::new();
    let samples = nodes
        .iter()
        .zip(&params)
        .enumerate()
        .map(|(k, (z, p))| {
            let set = if analyze.contains(k) { &memo[&key(p)] } else { &empty };
            ctx.sample_from(z, p, set)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaMap {
        region: region.clone(),
        resolution: res,
        samples,
    })
}

/// `(inf, sup)` of `η·candidate` over the recorded ground states. The right
/// derivative of `Σ` along `η` is bounded by the inf, the left one by the sup.
pub fn dir_deriv_bounds(eta: &[f64], sample: &SigmaSample) -> Result<(f64, f64)> {
    if sample.gradient_candidates.is_empty() {
        return Err(Error::invalid("sample", "no ground states recorded"));
    }
    let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    if eta.len() != sample.z.len() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("eta", "must be a unit vector of the sample dimension"));
    }
    let proj: Vec<f64> = sample
        .gradient_candidates
        .iter()
        .map(|g| g.iter().zip(eta).map(|(a, b)| a * b).sum())
        .collect();
    Ok((
        proj.iter().copied().fold(f64::INFINITY, f64::min),
        proj.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClarkeReport {
    pub critical: bool,
    /// Distance from the origin to the convex hull of the candidates.
    pub hull_margin: f64,
}

/// Whether `0` lies in the convex hull of the gradient candidates, within
/// `1e−6·max candidate norm`. This certifies only the sampled subset of the
/// ground-state set.
pub fn clarke_critical_test(sample: &SigmaSample) -> Result<ClarkeReport> {
    let cands = &sample.gradient_candidates;
    if cands.is_empty() {
        return Err(Error::invalid("sample", "no gradient candidates"));
    }
    let margin = min_norm_in_hull(cands);
    let scale = cands
        .iter()
        .map(|g| g.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(ClarkeReport {
        critical: margin <= 1e-6 * scale,
        hull_margin: margin,
    })
}

/// Euclidean norm of the minimum-norm point of the convex hull of `points`.
///
/// Enumerates affinely independent subsets of at most `d + 1` points
/// (Carathéodory) and keeps the best feasible affine minimizer.
pub fn min_norm_in_hull(points: &[Vec<f64>]) -> f64 {
    let d = points[0].len();
    let m = points.len();
    let mut best = f64::INFINITY;
    let max_size = (d + 1).min(m);
    for mask in 1u32..(1u32 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if subset.len() > max_size {
            continue;
        }
        let Some(weights) = affine_min_norm(points, &subset) else {
            continue;
        };
        if weights.iter().any(|&w| w < -1e-12) {
            continue;
        }
        let mut x = vec![0.0; d];
        for (&i, &w) in subset.iter().zip(&weights) {
            for a in 0..d {
                x[a] += w * points[i][a];
            }
        }
        best = best.min(x.iter().map(|a| a * a).sum::<f64>().sqrt());
    }
    best
}

/// Barycentric weights of the minimum-norm point on the affine hull of the
/// subset, from the KKT system `[G 1; 1ᵀ 0]`.
fn affine_min_norm(points: &[Vec<f64>], subset: &[usize]) -> Option<Vec<f64>> {
    let k = subset.len();
    let n = k + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            a[r][c] = points[i].iter().zip(&points[j]).map(|(x, y)| x * y).sum();
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][n] = 1.0;
    let scale = a
        .iter()
        .flat_map(|row| row[..n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][n] / a[r][r]).collect())
}

/// Central differences of `sigma_reduced` along every axis. Every probe point
/// must stay inside `region`.
pub fn finite_diff_sigma_grad(
    ctx: &SigmaContext<'_>,
    region: &Region,
    z: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", "must be positive"));
    }
    let d = z.len();
    let mut grad = vec![0.0; d];
    for a in 0..d {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[a] += step;
        zm[a] -= step;
        if !(region.contains(&zp) && region.contains(&zm)) {
            return Err(Error::invalid(
                "z",
                format!("probe at distance {step} leaves the region along axis {}", a + 1),
            ));
        }
        grad[a] = (ctx.sigma(&zp)? - ctx.sigma(&zm)?) / (2.0 * step);
    }
    Ok(grad)
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaRow {
    pub z: Vec<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub sigma: f64,
    /// Least energy of the direct solve at analyzed nodes; its gap to
    /// `sigma` monitors the cache interpolation.
    pub sigma_direct: Option<f64>,
    pub n_ground_states: usize,
    pub grad_cand_min_norm: Option<f64>,
    pub clarke_critical: Option<bool>,
}

impl SigmaMap {
    /// CSV header: `z_1..z_d, kappa1, kappa2, sigma, sigma_direct,
    /// n_ground_states, grad_cand_min_norm, clarke_critical`.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.region.dim()).map(|a| format!("z_{a}")).collect();
        for c in ["kappa1", "kappa2", "sigma", "sigma_direct", "n_ground_states", "grad_cand_min_norm", "clarke_critical"] {
            h.push(c.to_string());
        }
        h
    }

    pub fn rows(&self) -> Vec<SigmaRow> {
        self.samples
            .iter()
            .map(|s| {
                let clarke = clarke_critical_test(s).ok();
                SigmaRow {
                    z: s.z.clone(),
                    kappa1: s.kappa1,
                    kappa2: s.kappa2,
                    sigma: s.sigma,
                    sigma_direct: s.ground_states.iter().map(|g| g.energy).reduce(f64::min),
                    n_ground_states: s.ground_states.len(),
                    grad_cand_min_norm: s.analyzed().then(|| {
                        s.gradient_candidates
                            .iter()
                            .map(|g| g.iter().map(|a| a * a).sum::<f64>().sqrt())
                            .fold(f64::INFINITY, f64::min)
                    }),
                    clarke_critical: clarke.map(|c| c.critical),
                }
            })
            .collect()
    }

    /// Index of the node with the least `Σ` (first on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, s) in self.samples.iter().enumerate() {
            if s.sigma < self.samples[best].sigma {
                best = k;
            }
        }
        best
    }
}
