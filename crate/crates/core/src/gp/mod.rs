//! Gaussian-process regression over support beliefs: kernels, incremental
//! fitting, linear-dependence tests and upper-confidence queries.

mod cholesky;
mod kernel;
mod regression;

pub use cholesky::Cholesky;
pub use kernel::{kernel_eval, Kernel, KernelFamily};
pub use regression::{gpr_fit, GprState, JITTER_MAX, JITTER_START};

/// Signal variance heuristic: squared target range, at least 1.
pub fn signal_variance_for(targets: &[f64]) -> f64 {
    let (lo, hi) = targets
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if targets.is_empty() {
        return 1.0;
    }
    ((hi - lo) * (hi - lo)).max(1.0)
}
