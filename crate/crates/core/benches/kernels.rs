//! Parallel against sequential execution of the hot kernels. Both variants
//! run in the same build; `par::sequential` switches the helpers to the
//! serial path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cnls_core::fastsine::ShiftedLaplacian;
use cnls_core::grid::{laplacian_apply, Field, Grid, State};
use cnls_core::model::{FrozenParams, SystemOperator};
use cnls_core::par;
use cnls_core::solver::{system_ground_state, default_seeds, SolverOptions};

fn blob(g: &Grid) -> Field {
    Field::from_fn(g, |x| (-x.iter().map(|a| a * a).sum::<f64>()).exp())
}

fn modes<F: FnMut()>(c: &mut Criterion, group: &str, size: &str, mut f: F) {
    let mut grp = c.benchmark_group(group);
    grp.bench_function(BenchmarkId::new("parallel", size), |b| b.iter(&mut f));
    grp.bench_function(BenchmarkId::new("sequential", size), |b| b.iter(|| par::sequential(&mut f)));
    grp.finish();
}

fn kernels(c: &mut Criterion) {
    for n in [48, 96] {
        let g = Grid::new(3, 6.0, n).unwrap();
        let f = blob(&g);
        let size = format!("{n}^3");
        modes(c, "laplacian", &size, || {
            black_box(laplacian_apply(black_box(&f)));
        });

        let p = FrozenParams::new(1.0, 0.8, 1.5).unwrap();
        let op = SystemOperator::frozen(&g, &p);
        let s = State::new(f.clone(), f.scaled(0.5)).unwrap();
        modes(c, "energy_parts", &size, || {
            black_box(op.parts(black_box(&s)).unwrap());
        });
        modes(c, "residual", &size, || {
            black_box(op.residual(black_box(&s)).unwrap());
        });

        let solver = ShiftedLaplacian::new(&g, 1.0, 1.0);
        let mut out = vec![0.0; g.len()];
        modes(c, "fast_sine_solve", &size, || {
            solver.solve(black_box(f.values()), &mut out);
        });
    }
}

fn ground_state(c: &mut Criterion) {
    let g = Grid::new(2, 10.0, 97).unwrap();
    let p = FrozenParams::new(1.0, 0.8, 1.5).unwrap();
    let seeds = default_seeds();
    let opts = SolverOptions::default();
    let mut grp = c.benchmark_group("ground_state_2d");
    grp.sample_size(10);
    grp.bench_function("parallel", |b| {
        b.iter(|| black_box(system_ground_state(&p, &g, &seeds, &opts).unwrap().energy))
    });
    grp.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| black_box(system_ground_state(&p, &g, &seeds, &opts).unwrap().energy)))
    });
    grp.finish();
}

criterion_group!(benches, kernels, ground_state);
criterion_main!(benches);
