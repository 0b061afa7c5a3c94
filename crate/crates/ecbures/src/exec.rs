//! Trial fan-out: rayon when the `parallel` feature is on, sequential
//! otherwise.
//!
//! Trials are keyed by index and each derives its own RNG substream, so the
//! collected results are bit-identical across modes and thread counts. The
//! sequential path stays compiled in either mode; the criterion bench
//! compares the two directly.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for [`run_trials_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl ExecMode {
    /// The mode [`run_trials`] uses in this build.
    pub fn default_mode() -> Self {
        #[cfg(feature = "parallel")]
        {
            ExecMode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            ExecMode::Sequential
        }
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn run_trials_with<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Maps `f` over `0..n` with the build's default strategy.
pub fn run_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    run_trials_with(ExecMode::default_mode(), n, f)
}
