//! Execution strategy for the data-parallel loops (sampling, batch runs).
//!
//! With the `parallel` feature disabled every strategy runs sequentially, so
//! results never depend on the strategy: each work item is a pure function of
//! its index.

/// How to run a batch of independent work items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indexed<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maximum of `f(0..n)`; `f64::NEG_INFINITY` for an empty range.
pub fn max_indexed<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = exec;
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        assert_eq!(map_indexed(Exec::Sequential, 1000, f), map_indexed(Exec::Parallel, 1000, f));
        assert_eq!(max_indexed(Exec::Sequential, 1000, f), max_indexed(Exec::Parallel, 1000, f));
        assert_eq!(max_indexed(Exec::Parallel, 0, f), f64::NEG_INFINITY);
        let items: Vec<u32> = (0..50).collect();
        assert_eq!(
            map_slice(Exec::Sequential, &items, |x| x * 2),
            map_slice(Exec::Parallel, &items, |x| x * 2)
        );
    }
}
