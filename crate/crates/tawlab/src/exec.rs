//! Execution strategy for the data-parallel kernels.
//!
//! Every hot loop in the crate (grid stepping, Halton condition sampling,
//! distance-field evaluation, probe ensembles) funnels through the helpers
//! here. With the `parallel` feature enabled (the default) they run on rayon;
//! without it, or with [`Execution::Sequential`] requested at runtime, they
//! run on the current thread. Results are bit-identical either way: maps are
//! index-ordered and reductions fold the mapped buffer sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Use rayon when the `parallel` feature is compiled in.
    #[default]
    Parallel,
    /// Single-threaded, regardless of compiled features.
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Ordered map over `0..n`.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let threads = rayon::current_num_threads().max(1);
        let block = n.div_ceil(8 * threads).max(16);
        return (0..n)
            .into_par_iter()
            .with_min_len(block)
            .map(f)
            .collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Ordered map over a slice.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let threads = rayon::current_num_threads().max(1);
        let block = items.len().div_ceil(8 * threads).max(1);
        return items.par_iter().with_min_len(block).map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Apply `f(row_index, row)` to each `width`-sized chunk of `data`.
/// Rows are dispatched in blocks sized for the thread pool so per-task
/// overhead stays negligible against row work; results are identical to the
/// sequential order regardless of blocking.
pub fn for_each_row<F>(exec: Execution, data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(data.len() % width, 0);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() >= 150_000 {
        // below ~150k elements the fork-join latency outweighs the split row
        // work; fall through to the sequential loop there
        let rows = data.len() / width;
        let threads = rayon::current_num_threads().max(1);
        let block = rows.div_ceil(4 * threads).max(8);
        data.par_chunks_mut(width * block)
            .enumerate()
            .for_each(|(b, chunk)| {
                for (k, row) in chunk.chunks_mut(width).enumerate() {
                    f(b * block + k, row);
                }
            });
        return;
    }
    let _ = exec;
    for (r, row) in data.chunks_mut(width).enumerate() {
        f(r, row);
    }
}

/// Minimum of a mapped range, folded in index order. Returns `None` for n = 0.
pub fn min_by_key_indexed<F>(exec: Execution, n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let vals = map_indexed(exec, n, f);
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals.into_iter().enumerate() {
        match best {
            Some((_, bv)) if bv <= v => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
