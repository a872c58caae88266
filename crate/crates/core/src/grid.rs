//! Uniform tensor-product grids on `[-L, L]^d`, nodal fields with homogeneous
//! Dirichlet boundary values, and the discrete operators acting on them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const MAX_DIM: usize = 3;
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.dim, raw.half_width, raw.points)
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{points} points per axis, need at least {MIN_POINTS}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} must be positive"
            )));
        }
        Ok(Grid {
            dim,
            half_width,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// Total node count `n^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of node `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim - 1 - axis) as u32)
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points + i)
    }

    /// Node position; unused trailing axes are zero.
    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.coord(idx[axis]);
        }
        x
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        idx[..self.dim]
            .iter()
            .any(|&i| i == 0 || i == self.points - 1)
    }

    /// Same node count with the box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Grid> {
        Grid::new(self.dim, self.half_width * factor, self.points)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .take(self.dim)
            .all(|c| c.abs() <= self.half_width)
    }

    /// Short identifier used for cache keys and report fingerprints.
    pub fn fingerprint(&self) -> String {
        format!(
            "d{}-n{}-L{:016x}",
            self.dim,
            self.points,
            self.half_width.to_bits()
        )
    }

    /// Rows of contiguous nodes along the last axis.
    fn rows(&self) -> usize {
        self.points.pow((self.dim - 1) as u32)
    }

    /// Row chunk size (in nodes) for parallel kernels.
    fn row_chunk(&self) -> usize {
        self.points * (par::CHUNK / self.points).max(1)
    }
}

/// Real nodal values on a grid, row-major, zero on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: *grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} entries, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite entry {bad}")));
        }
        if let Some(j) = (0..values.len()).find(|&j| grid.is_boundary(j) && values[j] != 0.0) {
            return Err(Error::invalid(
                "values",
                format!("boundary node {j} holds {} instead of 0", values[j]),
            ));
        }
        Ok(Field {
            grid: *grid,
            values,
        })
    }

    /// Samples `f` at interior nodes; boundary nodes are set to zero.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Self {
        let mut values = vec![0.0; grid.len()];
        par::for_chunks_mut(&mut values, par::CHUNK, |start, chunk| {
            for (k, out) in chunk.iter_mut().enumerate() {
                let j = start + k;
                if !grid.is_boundary(j) {
                    let x = grid.position(j);
                    *out = f(&x[..grid.dim]);
                }
            }
        });
        Field {
            grid: *grid,
            values,
        }
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        par::max_abs(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Pointwise sum of two fields on the same grid.
    pub fn add(&self, other: &Field) -> Result<Field> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Tensor-product Catmull–Rom interpolation, with the field extended by
    /// zero outside the box.
    pub fn sample(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.points as isize;
        let h = g.spacing();
        let mut base = [0isize; MAX_DIM];
        let mut weights = [[0.0; 4]; MAX_DIM];
        for axis in 0..g.dim {
            let mut t = (x[axis] + g.half_width) / h;
            if !(t > -1.0 && t < n as f64) {
                return 0.0;
            }
            // Snap rounding noise so node positions reproduce node values.
            if (t - t.round()).abs() < 1e-9 {
                t = t.round();
            }
            let i = t.floor();
            let s = t - i;
            base[axis] = i as isize - 1;
            weights[axis] = catmull_rom(s);
        }
        let taps = 4usize.pow(g.dim as u32);
        let mut acc = 0.0;
        'tap: for tap in 0..taps {
            let mut w = 1.0;
            let mut flat = 0usize;
            let mut rem = tap;
            for axis in (0..g.dim).rev() {
                let k = rem % 4;
                rem /= 4;
                let i = base[axis] + k as isize;
                if i < 0 || i >= n {
                    continue 'tap;
                }
                w *= weights[axis][k];
                flat += i as usize * g.stride(axis);
            }
            acc += w * self.values[flat];
        }
        acc
    }

    /// Little-endian layout: `d: i64`, `n: i64`, `L: f64`, then `n^d` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.dim as i64).to_le_bytes())?;
        w.write_all(&(self.grid.points as i64).to_le_bytes())?;
        w.write_all(&self.grid.half_width.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let dim = i64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let points = i64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let half_width = f64::from_le_bytes(word);
        if dim < 1 || points < 1 {
            return Err(Error::InvalidGrid(format!("header d={dim}, n={points}")));
        }
        let grid = Grid::new(dim as usize, half_width, points as usize)?;
        let mut bytes = vec![0u8; 8 * grid.len()];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Field::from_values(&grid, values)
    }
}

fn catmull_rom(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        0.5 * (-s3 + 2.0 * s2 - s),
        0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
        0.5 * (-3.0 * s3 + 4.0 * s2 + s),
        0.5 * (s3 - s2),
    ]
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Ordered pair of fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        same_grid(u.grid(), v.grid())?;
        Ok(State { u, v })
    }

    pub fn zeros(grid: &Grid) -> Self {
        State {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    pub fn scaled(&self, t: f64) -> State {
        State {
            u: self.u.scaled(t),
            v: self.v.scaled(t),
        }
    }

    /// Componentwise minimum over all nodes.
    pub fn min(&self) -> f64 {
        self.u.min().min(self.v.min())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    pub(crate) fn clip_negative(&mut self) {
        for v in self
            .u
            .values_mut()
            .iter_mut()
            .chain(self.v.values_mut().iter_mut())
        {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    /// `u` followed by `v`, the layout used by the Krylov solvers.
    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.u.values.len());
        out.extend_from_slice(&self.u.values);
        out.extend_from_slice(&self.v.values);
        out
    }

    pub(crate) fn from_flat(grid: &Grid, flat: &[f64]) -> State {
        let n = grid.len();
        State {
            u: Field::from_raw(grid, flat[..n].to_vec()),
            v: Field::from_raw(grid, flat[n..].to_vec()),
        }
    }
}

/// Second-order central-difference Laplacian on raw nodal arrays; boundary
/// outputs are zero.
pub(crate) fn laplacian_into(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let n = grid.points;
    let d = grid.dim;
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let centre = 2.0 * d as f64;
    let strides: Vec<usize> = (0..d).map(|a| grid.stride(a)).collect();
    par::for_chunks_mut(out, grid.row_chunk(), |start, chunk| {
        for (r_local, row) in chunk.chunks_mut(n).enumerate() {
            let row_start = start + r_local * n;
            let idx = grid.unravel(row_start);
            if idx[..d - 1].iter().any(|&i| i == 0 || i == n - 1) {
                row.fill(0.0);
                continue;
            }
            row[0] = 0.0;
            row[n - 1] = 0.0;
            for k in 1..n - 1 {
                let j = row_start + k;
                let mut acc = f[j - 1] + f[j + 1] - centre * f[j];
                for &s in &strides[..d - 1] {
                    acc += f[j - s] + f[j + s];
                }
                row[k] = acc * inv_h2;
            }
        }
    });
}

pub fn laplacian_apply(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Field::from_raw(&f.grid, out)
}

/// Rectangle-rule quadrature `h^d Σ f_i^p` for `p ∈ {1, 2, 4}`.
pub fn integrate(f: &Field, p: u32) -> Result<f64> {
    let vals = &f.values;
    let sum = match p {
        1 => par::sum_chunks(vals.len(), par::CHUNK, |r| vals[r].iter().sum()),
        2 => par::sum_chunks(vals.len(), par::CHUNK, |r| {
            vals[r].iter().map(|v| v * v).sum()
        }),
        4 => par::sum_chunks(vals.len(), par::CHUNK, |r| {
            vals[r].iter().map(|v| (v * v) * (v * v)).sum()
        }),
        other => {
            return Err(Error::invalid(
                "p",
                format!("exponent {other} not supported (use 1, 2 or 4)"),
            ))
        }
    };
    Ok(f.grid.cell_volume() * sum)
}

pub(crate) fn dirichlet_energy_values(grid: &Grid, f: &[f64]) -> f64 {
    let n = grid.points;
    let d = grid.dim;
    let rows = grid.rows();
    let rows_per_chunk = (par::CHUNK / n).max(1);
    let strides: Vec<usize> = (0..d).map(|a| grid.stride(a)).collect();
    let sum = par::sum_chunks(rows, rows_per_chunk, |rr| {
        let mut acc = 0.0;
        for r in rr {
            let row_start = r * n;
            let idx = grid.unravel(row_start);
            for k in 0..n - 1 {
                let diff = f[row_start + k + 1] - f[row_start + k];
                acc += diff * diff;
            }
            for axis in 0..d - 1 {
                if idx[axis] + 1 < n {
                    let s = strides[axis];
                    for k in 0..n {
                        let diff = f[row_start + k + s] - f[row_start + k];
                        acc += diff * diff;
                    }
                }
            }
        }
        acc
    });
    let h = grid.spacing();
    sum * h.powi(d as i32 - 2)
}

/// `h^d Σ_i Σ_axes ((f_{i+e} − f_i)/h)²` over forward differences.
pub fn dirichlet_energy(f: &Field) -> f64 {
    dirichlet_energy_values(&f.grid, &f.values)
}

/// `h^d Σ f_i² g_i²`.
pub fn mixed_sq(f: &Field, g: &Field) -> Result<f64> {
    same_grid(&f.grid, &g.grid)?;
    Ok(f.grid.cell_volume() * mixed_sq_values(&f.values, &g.values))
}

pub(crate) fn mixed_sq_values(f: &[f64], g: &[f64]) -> f64 {
    par::sum_chunks(f.len(), par::CHUNK, |r| {
        f[r.clone()]
            .iter()
            .zip(&g[r])
            .map(|(a, b)| (a * a) * (b * b))
            .sum()
    })
}

/// Discrete `L²` inner product `h^d Σ f_i g_i`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    same_grid(&f.grid, &g.grid)?;
    Ok(f.grid.cell_volume() * par::dot(&f.values, &g.values))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalMax {
    /// Maximizing node refined by one quadratic fit per axis.
    pub point: Vec<f64>,
    pub value: f64,
    /// `max − second-highest local max`; infinite for a single local max and
    /// zero for a tie.
    pub gap: f64,
    pub node: usize,
    /// Runner-up local maximum (node position and value), when one exists.
    pub runner_up: Option<(Vec<f64>, f64)>,
}

pub fn global_max(f: &Field) -> Result<GlobalMax> {
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    let g = &f.grid;
    let d = g.dim;
    let n = g.points;
    let vals = &f.values;
    let offsets = neighbour_offsets(d);

    let is_local_max = |j: usize| {
        let idx = g.unravel(j);
        let fj = vals[j];
        'nb: for off in &offsets {
            let mut flat = 0usize;
            for axis in 0..d {
                let i = idx[axis] as isize + off[axis];
                if i < 0 || i >= n as isize {
                    continue 'nb;
                }
                flat = flat * n + i as usize;
            }
            if vals[flat] > fj {
                return false;
            }
        }
        true
    };

    // (value, node) of every local maximum, best first, ties by lowest index.
    let mut maxima: Vec<(f64, usize)> = (0..vals.len())
        .filter(|&j| is_local_max(j))
        .map(|j| (vals[j], j))
        .collect();
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let (value, node) = maxima[0];
    let gap = match maxima.get(1) {
        Some(&(second, _)) => value - second,
        None => f64::INFINITY,
    };
    let runner_up = maxima.get(1).map(|&(v, j)| {
        let x = g.position(j);
        (x[..d].to_vec(), v)
    });

    let idx = g.unravel(node);
    let h = g.spacing();
    let mut point: Vec<f64> = (0..d).map(|a| g.coord(idx[a])).collect();
    for axis in 0..d {
        if idx[axis] == 0 || idx[axis] == n - 1 {
            continue;
        }
        let s = g.stride(axis);
        let (fm, f0, fp) = (vals[node - s], vals[node], vals[node + s]);
        let curvature = fm - 2.0 * f0 + fp;
        if curvature < 0.0 {
            let shift = (0.5 * (fm - fp) / curvature).clamp(-0.5, 0.5);
            point[axis] += shift * h;
        }
    }

    Ok(GlobalMax {
        point,
        value,
        gap,
        node,
        runner_up,
    })
}

fn neighbour_offsets(d: usize) -> Vec<[isize; MAX_DIM]> {
    let count = 3usize.pow(d as u32);
    (0..count)
        .filter_map(|c| {
            let mut off = [0isize; MAX_DIM];
            let mut rem = c;
            for slot in off.iter_mut().take(d) {
                *slot = (rem % 3) as isize - 1;
                rem /= 3;
            }
            (off.iter().any(|&o| o != 0)).then_some(off)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soliton(x: f64) -> f64 {
        std::f64::consts::SQRT_2 / x.cosh()
    }

    #[test]
    fn make_grid_examples() {
        let g = Grid::new(1, 20.0, 9).unwrap();
        assert_eq!(g.spacing(), 5.0);
        let nodes: Vec<f64> = (0..9).map(|i| g.coord(i)).collect();
        assert_eq!(nodes, vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);

        let g3 = Grid::new(3, 12.0, 64).unwrap();
        assert_eq!(g3.len(), 64 * 64 * 64);
        assert!((g3.spacing() - 24.0 / 63.0).abs() < 1e-15);

        assert!(Grid::new(2, 10.0, 4).is_err());
        assert!(Grid::new(4, 10.0, 16).is_err());
        assert!(Grid::new(1, 0.0, 16).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(3, 1.0, 9).unwrap();
        for j in [0, 1, 80, 81, 300, 728] {
            assert_eq!(g.ravel(&g.unravel(j)), j);
        }
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let g = Grid::new(2, 3.0, 12).unwrap();
        assert!(laplacian_apply(&Field::zeros(&g)).is_zero());
    }

    #[test]
    fn laplacian_interior_constant() {
        let g = Grid::new(2, 1.0, 10).unwrap();
        let f = Field::from_fn(&g, |_| 1.0);
        let lap = laplacian_apply(&f);
        for j in 0..g.len() {
            let idx = g.unravel(j);
            let deep = idx[..2].iter().all(|&i| (2..=7).contains(&i));
            let layer = !g.is_boundary(j) && !deep;
            if deep {
                assert_eq!(lap.values()[j], 0.0);
            }
            if layer {
                assert!(lap.values()[j] < 0.0);
            }
        }
    }

    #[test]
    fn sine_mode_is_an_eigenfield() {
        // Stencil eigen-analysis: Δ_h sin(kπ(x+L)/(2L)) = −(2 − 2cos(kπh/(2L)))/h² · sin(..)
        let (l, n) = (3.0, 33);
        let g = Grid::new(1, l, n).unwrap();
        let h = g.spacing();
        for k in [1usize, 2, 5] {
            let kk = k as f64 * std::f64::consts::PI / (2.0 * l);
            let f = Field::from_fn(&g, |x| (kk * (x[0] + l)).sin());
            let lap = laplacian_apply(&f);
            let lambda = -(2.0 - 2.0 * (kk * h).cos()) / (h * h);
            for j in 1..n - 1 {
                assert!((lap.values()[j] - lambda * f.values()[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn soliton_quadratures() {
        // ∫U₀² = 4, ∫U₀⁴ = 16/3, ∫(U₀')² = 4/3 for U₀ = √2 sech x.
        let g = Grid::new(1, 20.0, 4097).unwrap();
        let u = Field::from_fn(&g, |x| soliton(x[0]));
        assert!((integrate(&u, 2).unwrap() - 4.0).abs() < 1e-6);
        assert!((integrate(&u, 4).unwrap() - 16.0 / 3.0).abs() < 1e-6);
        assert_eq!(integrate(&Field::zeros(&g), 2).unwrap(), 0.0);
        assert!(integrate(&u, 3).is_err());
    }

    #[test]
    fn soliton_dirichlet_energy() {
        // Forward differences carry an O(h²) defect of about 1.5e-5 at
        // n = 4097, so the 1e-5 check needs the doubled grid.
        let g = Grid::new(1, 20.0, 8193).unwrap();
        let u = Field::from_fn(&g, |x| soliton(x[0]));
        assert!((dirichlet_energy(&u) - 4.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn mixed_sq_identities() {
        let g = Grid::new(1, 20.0, 4097).unwrap();
        let u = Field::from_fn(&g, |x| soliton(x[0]));
        let two_u = u.scaled(2.0);
        assert_eq!(mixed_sq(&u, &Field::zeros(&g)).unwrap(), 0.0);
        let quart = integrate(&u, 4).unwrap();
        assert!((mixed_sq(&u, &u).unwrap() - quart).abs() < 1e-12);
        assert!((mixed_sq(&u, &two_u).unwrap() - 4.0 * quart).abs() < 1e-11);
        let other = Field::zeros(&Grid::new(1, 20.0, 4096).unwrap());
        assert!(matches!(mixed_sq(&u, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn dirichlet_energy_boundary_layer() {
        let g = Grid::new(1, 1.0, 11).unwrap();
        let f = Field::from_fn(&g, |_| 1.0);
        // Only the two differences touching the boundary contribute.
        let h = g.spacing();
        assert!((dirichlet_energy(&f) - 2.0 / h).abs() < 1e-12);
        assert_eq!(dirichlet_energy(&Field::zeros(&g)), 0.0);
    }

    #[test]
    fn global_max_single_peak() {
        let g = Grid::new(2, 5.0, 21).unwrap();
        let f = Field::from_fn(&g, |x| (-((x[0] - 1.0).powi(2) + x[1].powi(2))).exp());
        let m = global_max(&f).unwrap();
        assert!(m.gap > 0.0);
        assert!((m.point[0] - 1.0).abs() <= g.spacing());
        assert!(m.point[1].abs() <= g.spacing());
    }

    #[test]
    fn global_max_symmetric_pair_is_a_tie() {
        let g = Grid::new(1, 5.0, 41).unwrap();
        let f = Field::from_fn(&g, |x| (-(x[0] - 2.0).powi(2)).exp() + (-(x[0] + 2.0).powi(2)).exp());
        let m = global_max(&f).unwrap();
        assert_eq!(m.gap, 0.0);
        assert!(m.point[0] < 0.0, "lexicographically smallest node wins");
        assert!(m.runner_up.is_some());
    }

    #[test]
    fn global_max_refines_to_second_order() {
        let g = Grid::new(1, 20.0, 4097).unwrap();
        let f = Field::from_fn(&g, |x| soliton(x[0] - 1.3));
        let m = global_max(&f).unwrap();
        let h = g.spacing();
        assert!((m.point[0] - 1.3).abs() < h * h, "{}", m.point[0]);
        assert!(global_max(&Field::zeros(&g)).is_err());
    }

    #[test]
    fn binary_roundtrip_and_layout() {
        let g = Grid::new(2, 1.5, 9).unwrap();
        let f = Field::from_fn(&g, |x| x[0] * x[1] + 1.0);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 * 81);
        assert_eq!(i64::from_le_bytes(buf[0..8].try_into().unwrap()), 2);
        assert_eq!(i64::from_le_bytes(buf[8..16].try_into().unwrap()), 9);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 1.5);
        let back = Field::read_binary(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn from_values_rejects_nonzero_boundary() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let mut vals = vec![0.0; 8];
        vals[0] = 1.0;
        assert!(Field::from_values(&g, vals).is_err());
        let mut vals = vec![0.0; 8];
        vals[3] = f64::NAN;
        assert!(Field::from_values(&g, vals).is_err());
    }

    #[test]
    fn catmull_rom_reproduces_nodes_and_cubics() {
        let g = Grid::new(1, 4.0, 41).unwrap();
        let f = Field::from_fn(&g, |x| 1.0 + x[0] - 0.3 * x[0].powi(2) + 0.05 * x[0].powi(3));
        assert_eq!(f.sample(&[g.coord(7)]), f.values()[7]);
        let x = 0.123;
        let exact = 1.0 + x - 0.3 * x * x + 0.05 * x * x * x;
        assert!((f.sample(&[x]) - exact).abs() < 1e-3);
        assert_eq!(f.sample(&[9.0]), 0.0);
    }
}
