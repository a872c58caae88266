use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::io::config::{CachePolicy, RunSpec, SemiclassicalSpec, SigmaMapSpec};
use crate::io::output::{fmt_f64, write_atomic, CsvTable};
use crate::io::validate::validation_suite;
use crate::model::params::{FrozenParams, ModelParams};
use crate::model::thresholds::local_thresholds;
use crate::semiclassical::{continuation, limit_grid};
use crate::sigma::{
    clarke_critical_test, sigma_map, sigma_reduced, ReducedSigmaCache, SigmaContext,
    default_omega_sq,
};
use crate::solver::ground_state::{solve_seeds, system_ground_state, Classification, GroundState, SolverOptions};

pub const CACHE_ENV: &str = "CNLS_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".cnls-cache";

#[derive(Clone, Debug, Default, Serialize)]
pub struct Fingerprints {
    pub grid: Option<String>,
    pub cache: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub spec: Value,
    pub fingerprints: Fingerprints,
    pub timings: Vec<(String, f64)>,
    /// False when a `validate` property failed or a continuation aborted.
    pub success: bool,
    pub payload: Value,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
    /// Binary fields written next to the report, with optional JSON sidecars.
    #[serde(skip)]
    pub fields: Vec<(String, Field)>,
    #[serde(skip)]
    pub sidecars: Vec<(String, Value)>,
}

impl Report {
    fn new(spec: &RunSpec) -> Self {
        Report {
            tool: "cnls".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: spec.command().to_string(),
            spec: serde_json::to_value(spec).expect("spec serializes"),
            fingerprints: Fingerprints {
                grid: spec.grid().map(|g| g.fingerprint()),
                cache: None,
            },
            timings: Vec::new(),
            success: true,
            payload: Value::Null,
            tables: Vec::new(),
            fields: Vec::new(),
            sidecars: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Cache directory: `$CNLS_CACHE_DIR`, else the spec's `cache_dir`, else
/// `.cnls-cache` in the working directory.
pub fn cache_dir(configured: Option<&PathBuf>) -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    configured
        .cloned()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

fn timed<T>(report: &mut Report, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    report.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
    out
}

/// Dispatches a validated spec.
pub fn run(spec: &RunSpec) -> Result<Report> {
    let mut report = Report::new(spec);
    let start = Instant::now();
    let out = match spec {
        RunSpec::GroundState(s) => run_ground_state(&mut report, &s.grid, FrozenParams::new(s.kappa1, s.kappa2, s.b)?, &s.seeds, &s.solver),
        RunSpec::ThresholdSweep(s) => run_threshold_sweep(&mut report, s),
        RunSpec::SigmaMap(s) => run_sigma_map(&mut report, s),
        RunSpec::Semiclassical(s) => run_semiclassical(&mut report, s),
        RunSpec::Validate(_) => run_validate(&mut report),
    };
    out.map_err(|e| e.context(format!("command {}", spec.command())))?;
    report.timings.push(("total".into(), start.elapsed().as_secs_f64()));
    Ok(report)
}

const GS_COLUMNS: [&str; 10] = [
    "seed_id",
    "status",
    "classification",
    "energy",
    "nehari_residual",
    "el_residual",
    "sup_u",
    "sup_v",
    "norm_u_sq",
    "norm_v_sq",
];

fn gs_row(gs: &GroundState) -> Vec<String> {
    let s = gs.summary();
    vec![
        s.seed_id,
        "converged".into(),
        s.classification.to_string(),
        fmt_f64(s.energy),
        fmt_f64(s.nehari_residual),
        fmt_f64(s.el_residual),
        fmt_f64(s.sup_u),
        fmt_f64(s.sup_v),
        fmt_f64(s.norm_u_sq),
        fmt_f64(s.norm_v_sq),
    ]
}

fn run_ground_state(
    report: &mut Report,
    grid: &Grid,
    p: FrozenParams,
    seeds: &[crate::solver::ground_state::SeedSpec],
    opts: &SolverOptions,
) -> Result<()> {
    let outcomes = timed(report, "solve", || Ok(solve_seeds(&p, grid, seeds, opts)))?;
    let mut table = CsvTable::new("ground_states.csv", GS_COLUMNS.iter().map(|s| s.to_string()).collect());
    let mut best: Option<&GroundState> = None;
    for (seed, out) in seeds.iter().zip(&outcomes) {
        match out {
            Ok(gs) => {
                table.push(gs_row(gs));
                if best.is_none_or(|b| gs.energy < b.energy) {
                    best = Some(gs);
                }
            }
            Err(Error::Collapse) => {
                return Err(Error::Collapse.context(format!("seed {}", seed.id())))
            }
            Err(e) => {
                let mut row = vec![String::new(); GS_COLUMNS.len()];
                row[0] = seed.id();
                row[1] = format!("failed: {e}");
                table.push(row);
            }
        }
    }
    let best = best.ok_or_else(|| Error::NoConvergence("all seeds failed".into()))?;
    let summary = serde_json::to_value(best.summary())?;
    report.payload = json!({
        "ground_state": summary,
        "pohozaev_residual": crate::solver::ground_state::pohozaev_residual(&best.state, &p)?,
    });
    report.tables.push(table);
    report.fields.push(("u.bin".into(), best.state.u.clone()));
    report.fields.push(("v.bin".into(), best.state.v.clone()));
    report.sidecars.push(("ground_state.json".into(), summary));
    Ok(())
}

fn kind(c: Classification) -> &'static str {
    if c.is_scalar() {
        "Scalar"
    } else {
        "Vector"
    }
}

fn run_threshold_sweep(report: &mut Report, s: &crate::io::config::ThresholdSweepSpec) -> Result<()> {
    let t = local_thresholds(s.kappa1, s.kappa2)?;
    let header = [
        "b", "classification", "kind", "energy", "sup_u", "sup_v", "b_z", "b0", "b1", "expected", "consistent",
    ];
    let mut table = CsvTable::new("thresholds.csv", header.iter().map(|h| h.to_string()).collect());
    let mut rows = Vec::new();
    for &b in &s.b_values {
        let p = FrozenParams::new(s.kappa1, s.kappa2, b)?;
        let gs = timed(report, &format!("b={b}"), || system_ground_state(&p, &s.grid, &s.seeds, &s.solver))
            .map_err(|e| e.context(format!("b = {b}")))?;
        let expected = if b < t.b0 {
            "Scalar"
        } else if b > t.b1 {
            "Vector"
        } else {
            "Indeterminate"
        };
        let consistent = expected == "Indeterminate" || expected == kind(gs.classification);
        table.push(vec![
            fmt_f64(b),
            gs.classification.to_string(),
            kind(gs.classification).into(),
            fmt_f64(gs.energy),
            fmt_f64(gs.sup_u),
            fmt_f64(gs.sup_v),
            fmt_f64(t.b_z),
            fmt_f64(t.b0),
            fmt_f64(t.b1),
            expected.into(),
            consistent.to_string(),
        ]);
        rows.push(json!({"b": b, "kind": kind(gs.classification), "classification": gs.classification,
            "energy": gs.energy, "expected": expected, "consistent": consistent}));
    }
    report.payload = json!({
        "thresholds": {"b_z": t.b_z, "b0": t.b0, "b1": t.b1},
        "thresholds_proved_for_dim": 3,
        "rows": rows,
    });
    report.tables.push(table);
    Ok(())
}

fn obtain_cache(
    report: &mut Report,
    policy: CachePolicy,
    dir: Option<&PathBuf>,
    grid: &Grid,
    omega_sq: &[f64],
    b_knots: &[f64],
    opts: &SolverOptions,
) -> Result<ReducedSigmaCache> {
    let cache = timed(report, "reduced cache", || match policy {
        CachePolicy::Use => ReducedSigmaCache::load_or_build(&cache_dir(dir), grid, omega_sq, b_knots, opts),
        CachePolicy::Rebuild => {
            let cache = ReducedSigmaCache::build(grid, omega_sq, b_knots, opts)?;
            let dir = cache_dir(dir);
            std::fs::create_dir_all(&dir)?;
            cache.save(&dir.join(format!("{}.json", cache.fingerprint())))?;
            Ok(cache)
        }
        CachePolicy::Memory => ReducedSigmaCache::build(grid, omega_sq, b_knots, opts),
    })?;
    report.fingerprints.cache = Some(cache.fingerprint());
    Ok(cache)
}

fn run_sigma_map(report: &mut Report, s: &SigmaMapSpec) -> Result<()> {
    let rg = s.reference_grid.unwrap_or(s.grid);
    let knots = s.b_knots.clone().unwrap_or_else(|| vec![s.b]);
    let cache = obtain_cache(report, s.cache, s.cache_dir.as_ref(), &rg, &s.omega_sq, &knots, &s.solver)?;
    let ctx = SigmaContext {
        v: &s.v,
        w: &s.w,
        b: s.b,
        cache: &cache,
        grid: &s.grid,
        opts: s.solver,
    };
    let map = timed(report, "map", || sigma_map(&ctx, &s.region, s.resolution, &s.analyze))?;
    let mut table = CsvTable::new("sigma_map.csv", map.csv_header());
    for row in map.rows() {
        let mut cells: Vec<String> = row.z.iter().map(|x| fmt_f64(*x)).collect();
        cells.push(fmt_f64(row.kappa1));
        cells.push(fmt_f64(row.kappa2));
        cells.push(fmt_f64(row.sigma));
        cells.push(row.sigma_direct.map(fmt_f64).unwrap_or_default());
        cells.push(row.n_ground_states.to_string());
        cells.push(row.grad_cand_min_norm.map(fmt_f64).unwrap_or_default());
        cells.push(row.clarke_critical.map(|c| c.to_string()).unwrap_or_default());
        table.push(cells);
    }
    let best = &map.samples[map.argmin()];
    let analyzed: Vec<Value> = map
        .samples
        .iter()
        .filter(|s| s.analyzed())
        .map(|s| {
            json!({
                "z": s.z,
                "ground_states": s.ground_states,
                "gradient_candidates": s.gradient_candidates,
                "clarke": clarke_critical_test(s).ok(),
            })
        })
        .collect();
    report.payload = json!({
        "rows": map.samples.len(),
        "argmin": {"z": best.z, "sigma": best.sigma},
        "gamma": cache.gamma,
        "clarke_scope": "certificate over the sampled ground states of the default seed set",
        "analyzed": analyzed,
    });
    report.tables.push(table);
    Ok(())
}

/// Reference grid of the `Σ` cache used to pick `z_ref` (`κ_max = 1`).
fn default_frozen_grid(s: &SemiclassicalSpec) -> Result<Grid> {
    match s.continuation.frozen_grid {
        Some(g) => Ok(g),
        None => {
            let sched = s.eps_schedule.resolve()?;
            let eps_min = sched.smallest();
            limit_grid(&s.grid, eps_min, (s.grid.half_width() / eps_min).min(12.0))
        }
    }
}

/// `z_ref` from the spec or the minimizer of `Σ` over the region nodes.
fn reference_point(report: &mut Report, s: &SemiclassicalSpec) -> Result<Vec<f64>> {
    if let Some(z) = &s.z_ref {
        return Ok(z.clone());
    }
    let region = s.region.as_ref().expect("validated");
    let nodes = region.nodes(s.resolution);
    let score: Vec<f64> = if s.b == 0.0 {
        // Decoupled: Σ = Γ·min(V, W)^{(4−d)/2}, monotone in min(V, W).
        nodes.iter().map(|z| s.v.eval(z).min(s.w.eval(z))).collect()
    } else {
        let fg = default_frozen_grid(s)?;
        let cache = obtain_cache(report, s.cache, s.cache_dir.as_ref(), &fg, &default_omega_sq(), &[s.b], &SolverOptions::default())?;
        nodes
            .iter()
            .map(|z| sigma_reduced(&FrozenParams::new(s.v.eval(z), s.w.eval(z), s.b)?, &cache))
            .collect::<Result<_>>()?
    };
    let mut best = 0;
    for (k, v) in score.iter().enumerate() {
        if *v < score[best] {
            best = k;
        }
    }
    Ok(nodes[best].clone())
}

fn run_semiclassical(report: &mut Report, s: &SemiclassicalSpec) -> Result<()> {
    let sched = s.eps_schedule.resolve()?;
    let p = ModelParams::new(s.v.clone(), s.w.clone(), s.b, sched.values()[0], s.alpha)?;
    let z_ref = reference_point(report, s)?;
    let out = timed(report, "continuation", || continuation(&p, &z_ref, &sched, &s.grid, &s.continuation))?;
    let mut table = CsvTable::new("concentration.csv", out.csv_header());
    for r in &out.records {
        let mut cells = vec![fmt_f64(r.eps)];
        cells.extend(r.x_eps.iter().map(|x| fmt_f64(*x)));
        for x in [r.gap, r.u_at_max, r.v_at_max, r.mu1, r.mu2, r.energy_ratio, r.balance_norm, r.profile_distance] {
            cells.push(fmt_f64(x));
        }
        cells.push(out.verdict.as_str().into());
        table.push(cells);
    }
    report.payload = serde_json::to_value(&out)?;
    report.tables.push(table);
    if let Some(state) = &out.final_state {
        report.fields.push(("u.bin".into(), state.u.clone()));
        report.fields.push(("v.bin".into(), state.v.clone()));
    }
    // A failed ε keeps the partial report; the caller maps this to a solver
    // failure after writing it.
    report.success = out.aborted.is_none();
    Ok(())
}

fn run_validate(report: &mut Report) -> Result<()> {
    let results = timed(report, "suite", || Ok(validation_suite()))?;
    let mut table = CsvTable::new(
        "validation.csv",
        vec!["property".into(), "passed".into(), "detail".into()],
    );
    for r in &results {
        table.push(vec![r.name.clone(), r.passed.to_string(), r.detail.clone()]);
    }
    report.success = results.iter().all(|r| r.passed);
    report.payload = serde_json::to_value(&results)?;
    report.tables.push(table);
    Ok(())
}

/// Writes `report.json`, the CSV tables, binary fields and sidecars into
/// `dir`, each atomically. Returns the written paths.
pub fn write_outputs(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &report.tables {
        written.push(table.write(dir)?);
    }
    for (name, field) in &report.fields {
        let mut bytes = Vec::new();
        field.write_binary(&mut bytes)?;
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    for (name, value) in &report.sidecars {
        let path = dir.join(name);
        write_atomic(&path, serde_json::to_string_pretty(value)?.as_bytes())?;
        written.push(path);
    }
    let path = dir.join("report.json");
    write_atomic(&path, serde_json::to_string_pretty(report)?.as_bytes())?;
    written.push(path);
    Ok(written)
}
