//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction is split into fixed-size chunks whose partial results are
//! combined in index order, so the floating-point result does not depend on
//! the number of threads or on whether the `parallel` feature is enabled.

use std::cell::Cell;
use std::ops::Range;

/// Elements per reduction chunk.
pub const CHUNK: usize = 4096;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all helpers on the current thread taking the sequential path.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let previous = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(previous));
    out
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Ordered sum of `f` over consecutive chunks of `0..len`.
pub fn sum_chunks<F>(len: usize, chunk: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = len.div_ceil(chunk);
    let range = |c: usize| c * chunk..((c + 1) * chunk).min(len);
    let partials: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            if is_parallel() {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(|c| f(range(c))).collect()
            } else {
                (0..count).map(|c| f(range(c))).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..count).map(|c| f(range(c))).collect()
        }
    };
    partials.iter().sum()
}

/// Ordered sum of a fixed number of quantities over consecutive chunks.
pub fn sum_chunks_array<const K: usize, F>(len: usize, chunk: usize, f: F) -> [f64; K]
where
    F: Fn(Range<usize>) -> [f64; K] + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = len.div_ceil(chunk);
    let ranges: Vec<Range<usize>> = (0..count)
        .map(|c| c * chunk..((c + 1) * chunk).min(len))
        .collect();
    let partials = map(&ranges, |r| f(r.clone()));
    let mut total = [0.0; K];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Calls `f(start, chunk)` on consecutive mutable chunks of `out`.
pub fn for_chunks_mut<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(c, s)| f(c * chunk, s));
            return;
        }
    }
    out.chunks_mut(chunk)
        .enumerate()
        .for_each(|(c, s)| f(c * chunk, s));
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Largest absolute value; exact regardless of evaluation order.
pub fn max_abs(values: &[f64]) -> f64 {
    let partial = |r: Range<usize>| values[r].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let count = values.len().div_ceil(CHUNK);
    (0..count)
        .map(|c| partial(c * CHUNK..((c + 1) * CHUNK).min(values.len())))
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_chunks(a.len(), CHUNK, |r| {
        a[r.clone()].iter().zip(&b[r]).map(|(x, y)| x * y).sum()
    })
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for_chunks_mut(y, CHUNK, |start, ys| {
        for (k, yv) in ys.iter_mut().enumerate() {
            *yv += alpha * x[start + k];
        }
    });
}
