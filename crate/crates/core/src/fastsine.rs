//! Direct solver for the shifted discrete operator `−s Δ_h + c` with
//! homogeneous Dirichlet data, diagonalized by the type-I sine transform
//! along every axis.

use std::sync::Arc;

use rustdct::{Dst1, DctPlanner};

use crate::grid::{Grid, MAX_DIM};
use crate::par;

pub struct ShiftedLaplacian {
    grid: Grid,
    interior: usize,
    /// `s·λ_k` for the 1D stencil eigenvalues λ_k = (2 − 2cos(kπ/(n−1)))/h².
    eig: Vec<f64>,
    shift: f64,
    plan: Arc<dyn Dst1<f64>>,
}

impl std::fmt::Debug for ShiftedLaplacian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedLaplacian")
            .field("grid", &self.grid)
            .field("shift", &self.shift)
            .finish()
    }
}

impl ShiftedLaplacian {
    /// Operator `−diffusion·Δ_h + shift`; both coefficients must be positive.
    pub fn new(grid: &Grid, diffusion: f64, shift: f64) -> Self {
        assert!(diffusion > 0.0 && shift > 0.0);
        let m = grid.points() - 2;
        let h = grid.spacing();
        let eig = (1..=m)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / (m + 1) as f64;
                diffusion * (2.0 - 2.0 * theta.cos()) / (h * h)
            })
            .collect();
        let plan = DctPlanner::new().plan_dst1(m);
        ShiftedLaplacian {
            grid: *grid,
            interior: m,
            eig,
            shift,
            plan,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Solves `(−sΔ_h + c) x = rhs` on interior nodes. Boundary entries of
    /// `rhs` are ignored; those of `out` are set to zero.
    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let d = self.grid.dim();
        let m = self.interior;
        let mut buf = self.gather_interior(rhs);
        for axis in 0..d {
            self.transform_axis(&mut buf, axis);
        }
        let norm = (2.0 / (m + 1) as f64).powi(d as i32);
        let eig = &self.eig;
        let shift = self.shift;
        par::for_chunks_mut(&mut buf, par::CHUNK, |start, chunk| {
            for (k, val) in chunk.iter_mut().enumerate() {
                let mut rem = start + k;
                let mut denom = shift;
                for _ in 0..d {
                    denom += eig[rem % m];
                    rem /= m;
                }
                *val *= norm / denom;
            }
        });
        for axis in 0..d {
            self.transform_axis(&mut buf, axis);
        }
        self.scatter_interior(&buf, out);
    }

    fn gather_interior(&self, full: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let m = self.interior;
        let d = g.dim();
        let mut buf = vec![0.0; m.pow(d as u32)];
        par::for_chunks_mut(&mut buf, m, |start, row| {
            let mut idx = [0usize; MAX_DIM];
            let mut rem = start / m;
            for axis in (0..d - 1).rev() {
                idx[axis] = rem % m + 1;
                rem /= m;
            }
            idx[d - 1] = 1;
            let base = g.ravel(&idx[..d]);
            row.copy_from_slice(&full[base..base + m]);
        });
        buf
    }

    fn scatter_interior(&self, buf: &[f64], full: &mut [f64]) {
        let g = &self.grid;
        let m = self.interior;
        let n = g.points();
        let d = g.dim();
        par::for_chunks_mut(full, n, |start, row| {
            let idx = g.unravel(start);
            if idx[..d - 1].iter().any(|&i| i == 0 || i == n - 1) {
                row.fill(0.0);
                return;
            }
            let src = idx[..d - 1].iter().fold(0, |acc, &i| acc * m + (i - 1)) * m;
            row[0] = 0.0;
            row[n - 1] = 0.0;
            row[1..n - 1].copy_from_slice(&buf[src..src + m]);
        });
    }

    /// In-place DST-I along `axis` of an `m^d` interior array.
    ///
    /// The FFT-backed rustdct kernel leaves the zero padding slots of its
    /// scratch unwritten, so the scratch is cleared before every line.
    fn transform_axis(&self, buf: &mut [f64], axis: usize) {
        let d = self.grid.dim();
        let m = self.interior;
        let plan = &self.plan;
        if axis == d - 1 {
            par::for_chunks_mut(buf, m * (par::CHUNK / m).max(1), |_, chunk| {
                let mut scratch = vec![0.0; plan.get_scratch_len()];
                for line in chunk.chunks_mut(m) {
                    scratch.fill(0.0);
                    plan.process_dst1_with_scratch(line, &mut scratch);
                }
            });
            return;
        }
        // Strided axis: transpose lines into a contiguous buffer, transform,
        // and copy back.
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        let line_start = |line: usize| (line / stride) * block + line % stride;
        let mut lines = vec![0.0; buf.len()];
        {
            let src: &[f64] = buf;
            par::for_chunks_mut(&mut lines, m * (par::CHUNK / m).max(1), |start, chunk| {
                let mut scratch = vec![0.0; plan.get_scratch_len()];
                for (l, line) in chunk.chunks_mut(m).enumerate() {
                    let s0 = line_start(start / m + l);
                    for (k, val) in line.iter_mut().enumerate() {
                        *val = src[s0 + k * stride];
                    }
                    scratch.fill(0.0);
                    plan.process_dst1_with_scratch(line, &mut scratch);
                }
            });
        }
        let lines = &lines;
        par::for_chunks_mut(buf, par::CHUNK, |start, chunk| {
            for (o, val) in chunk.iter_mut().enumerate() {
                let j = start + o;
                let outer = j / block;
                let within = j % block;
                let k = within / stride;
                let line = outer * stride + within % stride;
                *val = lines[line * m + k];
            }
        });
    }
}
