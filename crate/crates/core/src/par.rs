//! Data-parallel helpers. With the `parallel` feature disabled every helper
//! runs sequentially and `Execution::Parallel` degrades to `Sequential`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch work (oracle enumeration, multi-target decodes, trial suites)
/// is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..len).map(f).collect()`, order preserved.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Minimum of `f(i)` over `0..len`, ties going to the smallest index.
/// Incomparable values (NaN) are never selected over a number.
pub fn argmin_range<F>(exec: Execution, len: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let better = |a: (usize, f64), b: (usize, f64)| -> (usize, f64) {
        if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) || (a.1.is_nan() && !b.1.is_nan()) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len)
            .into_par_iter()
            .map(|i| (i, f(i)))
            .reduce_with(better);
    }
    let _ = exec;
    (0..len).map(|i| (i, f(i))).reduce(better)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| ((i * 7919) % 101) as f64;
        for exec in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(map_range(exec, 5, |i| i * i), vec![0, 1, 4, 9, 16]);
            // value 0 is reached at i = 0 and i = 101; lowest index wins
            assert_eq!(argmin_range(exec, 300, f), Some((0, 0.0)));
        }
        assert_eq!(argmin_range(Execution::Parallel, 0, f), None);
    }
}
