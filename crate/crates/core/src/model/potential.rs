use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Bounded external potentials.
///
/// `CappedQuadratic` is `base + min(curvature·|x − center|², cap)`.
/// `DoubleWell` is `base + min(depth·min_k |x − c_k|²/width², cap)`, i.e. a
/// capped quadratic around the nearest of several equal-depth centres.
/// `Shifted` adds a constant to another potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    CappedQuadratic {
        base: f64,
        curvature: f64,
        center: Vec<f64>,
        #[serde(default = "default_cap")]
        cap: f64,
    },
    DoubleWell {
        base: f64,
        depth: f64,
        centers: Vec<Vec<f64>>,
        width: f64,
        #[serde(default = "default_cap")]
        cap: f64,
    },
    Shifted {
        inner: Box<PotentialSpec>,
        c: f64,
    },
}

pub const DEFAULT_CAP: f64 = 9.0;

fn default_cap() -> f64 {
    DEFAULT_CAP
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(c.iter().chain(std::iter::repeat(&0.0)))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

impl PotentialSpec {
    pub fn constant(value: f64) -> Self {
        PotentialSpec::Constant { value }
    }

    pub fn shifted(inner: PotentialSpec, c: f64) -> Self {
        PotentialSpec::Shifted {
            inner: Box::new(inner),
            c,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Constant { value } => *value,
            PotentialSpec::CappedQuadratic {
                base,
                curvature,
                center,
                cap,
            } => base + (curvature * dist2(x, center)).min(*cap),
            PotentialSpec::DoubleWell {
                base,
                depth,
                centers,
                width,
                cap,
            } => {
                let r2 = centers
                    .iter()
                    .map(|c| dist2(x, c))
                    .fold(f64::INFINITY, f64::min);
                base + (depth * r2 / (width * width)).min(*cap)
            }
            PotentialSpec::Shifted { inner, c } => inner.eval(x) + c,
        }
    }

    /// Analytic gradient; zero on the capped plateau.
    pub fn gradient(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut g = [0.0; MAX_DIM];
        match self {
            PotentialSpec::Constant { .. } => {}
            PotentialSpec::CappedQuadratic {
                curvature,
                center,
                cap,
                ..
            } => {
                if curvature * dist2(x, center) < *cap {
                    for (a, xa) in x.iter().enumerate() {
                        let ca = center.get(a).copied().unwrap_or(0.0);
                        g[a] = 2.0 * curvature * (xa - ca);
                    }
                }
            }
            PotentialSpec::DoubleWell {
                depth,
                centers,
                width,
                cap,
                ..
            } => {
                let nearest = centers
                    .iter()
                    .min_by(|a, b| dist2(x, a).total_cmp(&dist2(x, b)));
                if let Some(c) = nearest {
                    let k = depth / (width * width);
                    if k * dist2(x, c) < *cap {
                        for (a, xa) in x.iter().enumerate() {
                            let ca = c.get(a).copied().unwrap_or(0.0);
                            g[a] = 2.0 * k * (xa - ca);
                        }
                    }
                }
            }
            PotentialSpec::Shifted { inner, .. } => return inner.gradient(x),
        }
        g
    }

    /// Pointwise infimum over all of space.
    pub fn infimum(&self) -> f64 {
        match self {
            PotentialSpec::Constant { value } => *value,
            PotentialSpec::CappedQuadratic { base, cap, .. }
            | PotentialSpec::DoubleWell { base, cap, .. } => base + cap.min(0.0),
            PotentialSpec::Shifted { inner, c } => inner.infimum() + c,
        }
    }

    /// Pointwise supremum over all of space (every variant is bounded).
    pub fn supremum(&self) -> f64 {
        match self {
            PotentialSpec::Constant { value } => *value,
            PotentialSpec::CappedQuadratic { base, cap, .. }
            | PotentialSpec::DoubleWell { base, cap, .. } => base + cap.max(0.0),
            PotentialSpec::Shifted { inner, c } => inner.supremum() + c,
        }
    }

    /// Checks parameter signs and that every coordinate vector has `dim`
    /// entries. `name` is used in error messages.
    pub fn validate(&self, dim: usize, name: &str) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name}.{field}"), "must be finite"))
            }
        };
        match self {
            PotentialSpec::Constant { value } => finite("value", *value)?,
            PotentialSpec::CappedQuadratic {
                base,
                curvature,
                center,
                cap,
            } => {
                finite("base", *base)?;
                if !(curvature.is_finite() && *curvature >= 0.0) {
                    return Err(Error::invalid(format!("{name}.curvature"), "must be ≥ 0"));
                }
                if !(cap.is_finite() && *cap >= 0.0) {
                    return Err(Error::invalid(format!("{name}.cap"), "must be finite and ≥ 0"));
                }
                if center.len() != dim {
                    return Err(Error::invalid(
                        format!("{name}.center"),
                        format!("needs {dim} coordinates"),
                    ));
                }
            }
            PotentialSpec::DoubleWell {
                base,
                depth,
                centers,
                width,
                cap,
            } => {
                finite("base", *base)?;
                if !(depth.is_finite() && *depth >= 0.0) {
                    return Err(Error::invalid(format!("{name}.depth"), "must be ≥ 0"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::invalid(format!("{name}.width"), "must be > 0"));
                }
                if !(cap.is_finite() && *cap >= 0.0) {
                    return Err(Error::invalid(format!("{name}.cap"), "must be finite and ≥ 0"));
                }
                if centers.is_empty() || centers.iter().any(|c| c.len() != dim) {
                    return Err(Error::invalid(
                        format!("{name}.centers"),
                        format!("needs at least one centre with {dim} coordinates"),
                    ));
                }
            }
            PotentialSpec::Shifted { inner, c } => {
                finite("c", *c)?;
                inner.validate(dim, &format!("{name}.inner"))?;
            }
        }
        Ok(())
    }
}

pub fn eval_potential(spec: &PotentialSpec, x: &[f64]) -> f64 {
    spec.eval(x)
}
