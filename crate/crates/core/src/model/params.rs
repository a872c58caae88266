use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::potential::PotentialSpec;

/// Constant coefficients of the autonomous system
/// `−Δu + κ₁u = u³ + bv²u`, `−Δv + κ₂v = v³ + bu²v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub b: f64,
}

impl FrozenParams {
    pub fn new(kappa1: f64, kappa2: f64, b: f64) -> Result<Self> {
        let p = FrozenParams { kappa1, kappa2, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa1.is_finite() && self.kappa1 > 0.0) {
            return Err(Error::invalid("kappa1", "must be positive"));
        }
        if !(self.kappa2.is_finite() && self.kappa2 > 0.0) {
            return Err(Error::invalid("kappa2", "must be positive"));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::invalid("b", "coupling must be finite and ≥ 0"));
        }
        Ok(())
    }

    /// Component swap `(κ₁, κ₂) → (κ₂, κ₁)`.
    pub fn swapped(&self) -> Self {
        FrozenParams {
            kappa1: self.kappa2,
            kappa2: self.kappa1,
            b: self.b,
        }
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa1.max(self.kappa2)
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa1.min(self.kappa2)
    }
}

/// Full problem data for `−ε²Δu + V(x)u = u³ + bv²u`, `−ε²Δv + W(x)v = v³ + bu²v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub v: PotentialSpec,
    pub w: PotentialSpec,
    pub b: f64,
    pub eps: f64,
    /// Declared positive lower bound of both potentials.
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(v: PotentialSpec, w: PotentialSpec, b: f64, eps: f64, alpha: f64) -> Result<Self> {
        let p = ModelParams {
            v,
            w,
            b,
            eps,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::invalid("b", "coupling must be finite and ≥ 0"));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::invalid("eps", "must lie in (0, 1]"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if self.alpha > self.v.infimum() {
            return Err(Error::invalid(
                "alpha",
                format!("exceeds inf V = {}", self.v.infimum()),
            ));
        }
        if self.alpha > self.w.infimum() {
            return Err(Error::invalid(
                "alpha",
                format!("exceeds inf W = {}", self.w.infimum()),
            ));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut p = self.clone();
        p.eps = eps;
        p.validate()?;
        Ok(p)
    }

    /// Potentials frozen at `z`.
    pub fn frozen_at(&self, z: &[f64]) -> Result<FrozenParams> {
        FrozenParams::new(self.v.eval(z), self.w.eval(z), self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_validation() {
        assert!(FrozenParams::new(1.0, 1.0, 0.0).is_ok());
        assert!(FrozenParams::new(0.0, 1.0, 1.0).is_err());
        assert!(FrozenParams::new(1.0, -1.0, 1.0).is_err());
        assert!(FrozenParams::new(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn model_validation() {
        let v = PotentialSpec::constant(1.0);
        let w = PotentialSpec::constant(2.0);
        assert!(ModelParams::new(v.clone(), w.clone(), 1.0, 0.5, 1.0).is_ok());
        assert!(ModelParams::new(v.clone(), w.clone(), 1.0, 1.5, 1.0).is_err());
        assert!(ModelParams::new(v.clone(), w.clone(), 1.0, 0.5, 1.5).is_err());
        assert!(ModelParams::new(v, w, 1.0, 0.0, 1.0).is_err());
    }
}
