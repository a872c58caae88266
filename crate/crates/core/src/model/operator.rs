//! The discrete coupled operator shared by the frozen and the full problem.
//!
//! The discrete energy is
//! `½(s·D(u) + Σ V u² h^d) + ½(s·D(v) + Σ W v² h^d) − ¼ Σ (u⁴ + 2b u²v² + v⁴) h^d`
//! with `s` the diffusion coefficient (`1` frozen, `ε²` otherwise) and `D` the
//! forward-difference Dirichlet energy, so its gradient is exactly `h^d` times
//! the strong-form residual computed here.

use crate::error::{Error, Result};
use crate::fastsine::ShiftedLaplacian;
use crate::grid::{dirichlet_energy_values, laplacian_into, same_grid, Grid, State};
use crate::model::params::{FrozenParams, ModelParams};
use crate::model::potential::PotentialSpec;
use crate::par;

#[derive(Clone, Debug)]
pub(crate) enum Coefficient {
    Constant(f64),
    Nodal(Vec<f64>),
}

impl Coefficient {
    fn sample(grid: &Grid, spec: &PotentialSpec) -> Self {
        if let PotentialSpec::Constant { value } = spec {
            return Coefficient::Constant(*value);
        }
        let mut vals = vec![0.0; grid.len()];
        par::for_chunks_mut(&mut vals, par::CHUNK, |start, chunk| {
            for (k, out) in chunk.iter_mut().enumerate() {
                let x = grid.position(start + k);
                *out = spec.eval(&x[..grid.dim()]);
            }
        });
        Coefficient::Nodal(vals)
    }

    #[inline]
    fn at(&self, j: usize) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(v) => v[j],
        }
    }

    fn min_interior(&self, grid: &Grid) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(v) => (0..v.len())
                .filter(|&j| !grid.is_boundary(j))
                .map(|j| v[j])
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn max_interior(&self, grid: &Grid) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(v) => (0..v.len())
                .filter(|&j| !grid.is_boundary(j))
                .map(|j| v[j])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Quadrature pieces of the energy of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    /// `s·D(u)` and `s·D(v)`.
    pub kinetic_u: f64,
    pub kinetic_v: f64,
    /// `∫V u²` and `∫W v²`.
    pub potential_u: f64,
    pub potential_v: f64,
    pub quartic_u: f64,
    pub quartic_v: f64,
    /// `∫u²v²`.
    pub mixed: f64,
    pub b: f64,
}

impl EnergyParts {
    /// `‖u‖² + ‖v‖²` in the operator norms.
    pub fn quadratic(&self) -> f64 {
        self.kinetic_u + self.kinetic_v + self.potential_u + self.potential_v
    }

    /// `∫(u⁴ + 2b u²v² + v⁴)`.
    pub fn quartic(&self) -> f64 {
        self.quartic_u + 2.0 * self.b * self.mixed + self.quartic_v
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.quadratic() - 0.25 * self.quartic()
    }

    pub fn nehari(&self) -> f64 {
        self.quadratic() - self.quartic()
    }
}

#[derive(Clone, Debug)]
pub struct SystemOperator {
    grid: Grid,
    diffusion: f64,
    v: Coefficient,
    w: Coefficient,
    b: f64,
}

impl SystemOperator {
    pub fn frozen(grid: &Grid, p: &FrozenParams) -> Self {
        SystemOperator {
            grid: *grid,
            diffusion: 1.0,
            v: Coefficient::Constant(p.kappa1),
            w: Coefficient::Constant(p.kappa2),
            b: p.b,
        }
    }

    pub fn semiclassical(grid: &Grid, p: &ModelParams) -> Self {
        SystemOperator {
            grid: *grid,
            diffusion: p.eps * p.eps,
            v: Coefficient::sample(grid, &p.v),
            w: Coefficient::sample(grid, &p.w),
            b: p.b,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn coupling(&self) -> f64 {
        self.b
    }

    /// Largest potential value over interior nodes, either component.
    pub fn max_potential(&self) -> f64 {
        self.v
            .max_interior(&self.grid)
            .max(self.w.max_interior(&self.grid))
    }

    fn check(&self, s: &State) -> Result<()> {
        same_grid(&self.grid, s.grid())
    }

    pub fn parts(&self, s: &State) -> Result<EnergyParts> {
        self.check(s)?;
        let u = s.u.values();
        let v = s.v.values();
        let [pot_u, pot_v, q_u, q_v, mixed] =
            par::sum_chunks_array::<5, _>(u.len(), par::CHUNK, |r| {
                let mut acc = [0.0; 5];
                for j in r {
                    let (uj, vj) = (u[j], v[j]);
                    let (u2, v2) = (uj * uj, vj * vj);
                    acc[0] += self.v.at(j) * u2;
                    acc[1] += self.w.at(j) * v2;
                    acc[2] += u2 * u2;
                    acc[3] += v2 * v2;
                    acc[4] += u2 * v2;
                }
                acc
            });
        let dv = self.grid.cell_volume();
        Ok(EnergyParts {
            kinetic_u: self.diffusion * dirichlet_energy_values(&self.grid, u),
            kinetic_v: self.diffusion * dirichlet_energy_values(&self.grid, v),
            potential_u: dv * pot_u,
            potential_v: dv * pot_v,
            quartic_u: dv * q_u,
            quartic_v: dv * q_v,
            mixed: dv * mixed,
            b: self.b,
        })
    }

    pub fn energy(&self, s: &State) -> Result<f64> {
        Ok(self.parts(s)?.energy())
    }

    /// Strong-form residual into a flat `[u; v]` buffer. Inputs vanish on the
    /// boundary, so the boundary entries of the output are zero.
    pub(crate) fn residual_flat(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = u.len();
        let (ru, rv) = out.split_at_mut(n);
        laplacian_into(&self.grid, u, ru);
        laplacian_into(&self.grid, v, rv);
        let s = self.diffusion;
        let b = self.b;
        par::for_chunks_mut(ru, par::CHUNK, |start, chunk| {
            for (k, r) in chunk.iter_mut().enumerate() {
                let j = start + k;
                let (uj, vj) = (u[j], v[j]);
                *r = -s * *r + self.v.at(j) * uj - uj * uj * uj - b * vj * vj * uj;
            }
        });
        par::for_chunks_mut(rv, par::CHUNK, |start, chunk| {
            for (k, r) in chunk.iter_mut().enumerate() {
                let j = start + k;
                let (uj, vj) = (u[j], v[j]);
                *r = -s * *r + self.w.at(j) * vj - vj * vj * vj - b * uj * uj * vj;
            }
        });
    }

    pub fn residual(&self, s: &State) -> Result<State> {
        self.check(s)?;
        let mut out = vec![0.0; 2 * self.grid.len()];
        self.residual_flat(s.u.values(), s.v.values(), &mut out);
        Ok(State::from_flat(&self.grid, &out))
    }

    /// Jacobian of the residual at `(u, v)` applied to the flat direction `dir`.
    pub(crate) fn jacobian_apply(&self, u: &[f64], v: &[f64], dir: &[f64], out: &mut [f64]) {
        let n = u.len();
        let (du, dv) = dir.split_at(n);
        let (ou, ov) = out.split_at_mut(n);
        laplacian_into(&self.grid, du, ou);
        laplacian_into(&self.grid, dv, ov);
        let s = self.diffusion;
        let b = self.b;
        par::for_chunks_mut(ou, par::CHUNK, |start, chunk| {
            for (k, r) in chunk.iter_mut().enumerate() {
                let j = start + k;
                let (uj, vj) = (u[j], v[j]);
                *r = -s * *r + (self.v.at(j) - 3.0 * uj * uj - b * vj * vj) * du[j]
                    - 2.0 * b * uj * vj * dv[j];
            }
        });
        par::for_chunks_mut(ov, par::CHUNK, |start, chunk| {
            for (k, r) in chunk.iter_mut().enumerate() {
                let j = start + k;
                let (uj, vj) = (u[j], v[j]);
                *r = -s * *r + (self.w.at(j) - 3.0 * vj * vj - b * uj * uj) * dv[j]
                    - 2.0 * b * uj * vj * du[j];
            }
        });
    }

    /// Block-diagonal SPD preconditioner `diag(−sΔ + min V, −sΔ + min W)`.
    pub(crate) fn preconditioner(&self) -> Preconditioner {
        Preconditioner {
            u: ShiftedLaplacian::new(&self.grid, self.diffusion, self.v.min_interior(&self.grid)),
            w: ShiftedLaplacian::new(&self.grid, self.diffusion, self.w.min_interior(&self.grid)),
        }
    }

    /// Scale factor `θ` placing `θ·s` on the Nehari manifold, and the
    /// projected state.
    pub fn project(&self, s: &State) -> Result<(f64, State)> {
        let parts = self.parts(s)?;
        if s.is_zero() {
            return Err(Error::ZeroState);
        }
        let quartic = parts.quartic();
        let quadratic = parts.quadratic();
        if !(quartic > 1e-300 && quartic > f64::EPSILON * 1e-6 * quadratic) {
            return Err(Error::VanishingQuartic);
        }
        let theta = (quadratic / quartic).sqrt();
        Ok((theta, s.scaled(theta)))
    }
}

pub(crate) struct Preconditioner {
    u: ShiftedLaplacian,
    w: ShiftedLaplacian,
}

impl Preconditioner {
    pub(crate) fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len() / 2;
        let (ou, ov) = out.split_at_mut(n);
        self.u.solve(&rhs[..n], ou);
        self.w.solve(&rhs[n..], ov);
    }
}
