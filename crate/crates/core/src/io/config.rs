//! Run configuration: JSON documents with a top-level `"command"` key.
//!
//! Every optional field has an explicit default that is written back into the
//! echoed spec, so `parse → echo → parse` is a fixed point.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::params::{FrozenParams, ModelParams};
use crate::model::potential::PotentialSpec;
use crate::semiclassical::{eps_floor, ContinuationOptions, EpsSchedule};
use crate::sigma::{default_omega_sq, AnalyzeNodes, Region};
use crate::solver::ground_state::{default_seeds, SeedSpec, SolverOptions};

pub const COMMANDS: [&str; 5] = [
    "ground-state",
    "sigma-map",
    "threshold-sweep",
    "semiclassical",
    "validate",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateSpec {
    pub command: String,
    pub grid: Grid,
    pub kappa1: f64,
    pub kappa2: f64,
    pub b: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<SeedSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSweepSpec {
    pub command: String,
    pub grid: Grid,
    pub kappa1: f64,
    pub kappa2: f64,
    pub b_values: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<SeedSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    /// Load a matching cache file or build and store one.
    #[default]
    Use,
    /// Build afresh and overwrite.
    Rebuild,
    /// Build in memory only.
    Memory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaMapSpec {
    pub command: String,
    /// Grid for direct ground-state solves at analyzed nodes.
    pub grid: Grid,
    pub v: PotentialSpec,
    pub w: PotentialSpec,
    pub b: f64,
    pub region: Region,
    pub resolution: usize,
    /// Reference grid of the reduced cache (`κ_max = 1`); defaults to `grid`.
    #[serde(default)]
    pub reference_grid: Option<Grid>,
    #[serde(default = "default_omega_sq")]
    pub omega_sq: Vec<f64>,
    /// Coupling knots of the cache; defaults to `[b]`.
    #[serde(default)]
    pub b_knots: Option<Vec<f64>>,
    #[serde(default)]
    pub analyze: AnalyzeNodes,
    #[serde(default)]
    pub cache: CachePolicy,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricEps {
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
}

impl Default for GeometricEps {
    fn default() -> Self {
        GeometricEps {
            max: 0.5,
            min: 0.05,
            ratio: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Explicit(EpsSchedule),
    Geometric(GeometricEps),
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Geometric(GeometricEps::default())
    }
}

impl ScheduleSpec {
    pub fn resolve(&self) -> Result<EpsSchedule> {
        match self {
            ScheduleSpec::Explicit(s) => Ok(s.clone()),
            ScheduleSpec::Geometric(g) => EpsSchedule::geometric(g.max, g.min, g.ratio),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalSpec {
    pub command: String,
    pub grid: Grid,
    pub v: PotentialSpec,
    pub w: PotentialSpec,
    pub b: f64,
    pub alpha: f64,
    #[serde(default)]
    pub eps_schedule: ScheduleSpec,
    /// Reference point; when absent it is the minimizer of `Σ` over the
    /// nodes of `region`.
    #[serde(default)]
    pub z_ref: Option<Vec<f64>>,
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub continuation: ContinuationOptions,
    #[serde(default)]
    pub cache: CachePolicy,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_resolution() -> usize {
    11
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    pub command: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RunSpec {
    GroundState(GroundStateSpec),
    ThresholdSweep(ThresholdSweepSpec),
    SigmaMap(SigmaMapSpec),
    Semiclassical(SemiclassicalSpec),
    Validate(ValidateSpec),
}

impl RunSpec {
    pub fn command(&self) -> &str {
        match self {
            RunSpec::GroundState(s) => &s.command,
            RunSpec::ThresholdSweep(s) => &s.command,
            RunSpec::SigmaMap(s) => &s.command,
            RunSpec::Semiclassical(s) => &s.command,
            RunSpec::Validate(s) => &s.command,
        }
    }

    pub fn output_dir(&self) -> Option<&PathBuf> {
        match self {
            RunSpec::GroundState(s) => s.output_dir.as_ref(),
            RunSpec::ThresholdSweep(s) => s.output_dir.as_ref(),
            RunSpec::SigmaMap(s) => s.output_dir.as_ref(),
            RunSpec::Semiclassical(s) => s.output_dir.as_ref(),
            RunSpec::Validate(s) => s.output_dir.as_ref(),
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match self {
            RunSpec::GroundState(s) => Some(&s.grid),
            RunSpec::ThresholdSweep(s) => Some(&s.grid),
            RunSpec::SigmaMap(s) => Some(&s.grid),
            RunSpec::Semiclassical(s) => Some(&s.grid),
            RunSpec::Validate(_) => None,
        }
    }

    /// Echo of the spec with every default spelled out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

fn parse_as<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let value: serde_json::Value = parse_as(text)?;
    let command = match value.get("command") {
        Some(serde_json::Value::String(c)) => c.clone(),
        Some(_) => return Err(Error::invalid("command", "must be a string")),
        None => {
            return Err(Error::invalid(
                "command",
                format!("missing; expected one of {}", COMMANDS.join(", ")),
            ))
        }
    };
    let spec = match command.as_str() {
        "ground-state" => RunSpec::GroundState(parse_as(text)?),
        "threshold-sweep" => RunSpec::ThresholdSweep(parse_as(text)?),
        "sigma-map" => RunSpec::SigmaMap(parse_as(text)?),
        "semiclassical" => RunSpec::Semiclassical(parse_as(text)?),
        "validate" => RunSpec::Validate(parse_as(text)?),
        other => {
            return Err(Error::invalid(
                "command",
                format!("unknown command `{other}`; expected one of {}", COMMANDS.join(", ")),
            ))
        }
    };
    validate_spec(&spec)?;
    Ok(spec)
}

fn check_solver(opts: &SolverOptions) -> Result<()> {
    let f = &opts.flow;
    if !(f.step > 0.0 && f.min_step > 0.0 && f.min_step <= f.step) {
        return Err(Error::invalid("solver.flow.step", "need 0 < min_step ≤ step"));
    }
    if !(f.rel_tol > 0.0) || f.max_iter == 0 {
        return Err(Error::invalid("solver.flow", "rel_tol and max_iter must be positive"));
    }
    if !(opts.classify_tol > 0.0 && opts.classify_tol < 1.0) {
        return Err(Error::invalid("solver.classify_tol", "must lie in (0, 1)"));
    }
    if !(opts.newton_rel_tol > 0.0) || !(opts.negativity_tol >= 0.0) {
        return Err(Error::invalid("solver", "tolerances must be positive"));
    }
    Ok(())
}

fn check_seeds(seeds: &[SeedSpec]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "at least one seed is required"));
    }
    seeds.iter().try_for_each(|s| s.validate())
}

fn check_b(name: &str, b: f64) -> Result<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "coupling must be finite and ≥ 0"))
    }
}

/// Semantic checks run before any solve.
pub fn validate_spec(spec: &RunSpec) -> Result<()> {
    match spec {
        RunSpec::GroundState(s) => {
            FrozenParams::new(s.kappa1, s.kappa2, s.b)?;
            check_seeds(&s.seeds)?;
            check_solver(&s.solver)
        }
        RunSpec::ThresholdSweep(s) => {
            FrozenParams::new(s.kappa1, s.kappa2, 0.0)?;
            if s.b_values.is_empty() {
                return Err(Error::invalid("b_values", "needs at least one coupling"));
            }
            s.b_values.iter().try_for_each(|&b| check_b("b_values", b))?;
            check_seeds(&s.seeds)?;
            check_solver(&s.solver)
        }
        RunSpec::SigmaMap(s) => {
            let d = s.grid.dim();
            check_b("b", s.b)?;
            s.v.validate(d, "v")?;
            s.w.validate(d, "w")?;
            if s.v.infimum() <= 0.0 || s.w.infimum() <= 0.0 {
                return Err(Error::invalid("v, w", "potentials must be bounded below by a positive constant"));
            }
            s.region.validate(d)?;
            if s.resolution == 0 {
                return Err(Error::invalid("resolution", "must be ≥ 1"));
            }
            if let Some(rg) = &s.reference_grid {
                if rg.dim() != d {
                    return Err(Error::invalid("reference_grid", format!("must have dim {d}")));
                }
            }
            if s.omega_sq.is_empty()
                || s.omega_sq.iter().any(|w| !(*w > 0.0 && *w <= 1.0))
                || s.omega_sq.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(Error::invalid("omega_sq", "knots must be increasing in (0, 1]"));
            }
            if let Some(knots) = &s.b_knots {
                if knots.is_empty() || knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("b_knots", "knots must be strictly increasing"));
                }
                knots.iter().try_for_each(|&b| check_b("b_knots", b))?;
                if s.b < knots[0] || s.b > knots[knots.len() - 1] {
                    return Err(Error::invalid("b", "must lie within the b_knots range"));
                }
            }
            if let AnalyzeNodes::Nodes(list) = &s.analyze {
                let count = s.resolution.pow(d as u32);
                if list.iter().any(|&k| k >= count) {
                    return Err(Error::invalid("analyze", format!("node indices must be < {count}")));
                }
            }
            check_solver(&s.solver)
        }
        RunSpec::Semiclassical(s) => {
            let d = s.grid.dim();
            s.v.validate(d, "v")?;
            s.w.validate(d, "w")?;
            let sched = s.eps_schedule.resolve()?;
            let p = ModelParams::new(s.v.clone(), s.w.clone(), s.b, sched.values()[0], s.alpha)?;
            let floor = eps_floor(&p, &s.grid);
            if sched.smallest() < floor {
                return Err(Error::invalid(
                    "eps_schedule",
                    format!(
                        "smallest ε = {} is below the floor 4h·√(sup V) = {floor} for this grid",
                        sched.smallest()
                    ),
                ));
            }
            match (&s.z_ref, &s.region) {
                (Some(z), _) => {
                    if z.len() != d || !s.grid.contains(z) {
                        return Err(Error::invalid("z_ref", format!("needs {d} coordinates inside the box")));
                    }
                }
                (None, Some(r)) => {
                    r.validate(d)?;
                    if s.resolution == 0 {
                        return Err(Error::invalid("resolution", "must be ≥ 1"));
                    }
                }
                (None, None) => {
                    return Err(Error::invalid("z_ref", "give z_ref or a region to minimize Σ over"))
                }
            }
            let c = &s.continuation;
            if !(c.cutoff_fraction > 0.0 && c.cutoff_fraction < 1.0) {
                return Err(Error::invalid("continuation.cutoff_fraction", "must lie in (0, 1)"));
            }
            if !(c.fit_inner >= 0.0 && c.fit_inner < c.fit_outer) {
                return Err(Error::invalid("continuation.fit_inner", "need 0 ≤ fit_inner < fit_outer"));
            }
            if let Some(fg) = &c.frozen_grid {
                if fg.dim() != d {
                    return Err(Error::invalid("continuation.frozen_grid", format!("must have dim {d}")));
                }
            }
            Ok(())
        }
        RunSpec::Validate(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ground_state_gets_default_seeds() {
        let spec = parse_config(
            r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 20, "points": 257},
                "kappa1": 1, "kappa2": 1, "b": 2}"#,
        )
        .unwrap();
        let RunSpec::GroundState(gs) = &spec else {
            panic!("wrong variant")
        };
        assert_eq!(gs.seeds, default_seeds());
        assert_eq!(gs.solver, SolverOptions::default());
        let again = parse_config(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn unknown_command_lists_valid_ones() {
        let err = parse_config(r#"{"command": "solve"}"#).unwrap_err();
        let text = err.to_string();
        for c in COMMANDS {
            assert!(text.contains(c), "{text}");
        }
        assert!(err.is_config_error());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_config("{\n  \"command\": \"validate\",\n  oops\n}").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected_with_position() {
        let err = parse_config(
            "{\"command\": \"ground-state\",\n\"grid\": {\"dim\": 1, \"half_width\": 5, \"points\": 33},\n\"kappa1\": 1, \"kappa2\": 1, \"b\": 0, \"kapa\": 3}",
        )
        .unwrap_err();
        match err {
            Error::ConfigParse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("kapa"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eps_below_floor_names_floor() {
        let err = parse_config(
            r#"{"command": "semiclassical", "grid": {"dim": 1, "half_width": 4, "points": 65},
                "v": {"type": "constant", "value": 1}, "w": {"type": "constant", "value": 1},
                "b": 0, "alpha": 1, "z_ref": [0.0],
                "eps_schedule": [0.5, 0.1]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("floor"), "{err}");
        assert!(err.is_config_error());
    }
}
