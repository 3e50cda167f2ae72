//! Finite-horizon POMDP planning by point-based value iteration.
//!
//! The lower bound is a set of alpha-vectors per stage. The upper bound is a
//! set of belief/value pairs per stage, projected to unseen beliefs either by
//! sawtooth interpolation or by a Gaussian-process upper confidence bound
//! fitted to a sparse support set.
//!
//! ```
//! use pbvi_core::{parse_pomdp, solve, SolverConfig};
//!
//! let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/tiger.pomdp")).unwrap();
//! let model = parse_pomdp(&text).unwrap().with_horizon(2);
//! let sol = solve(&model, &SolverConfig::default()).unwrap();
//! assert!((sol.lb + 2.0).abs() < 1e-6);
//! ```

pub mod bounds;
pub mod error;
pub mod gp;
pub mod model;
mod par;
pub mod sampling;
pub mod solver;
#[doc(hidden)]
pub mod testing;

pub use bounds::{exact_value, lower_bound_value, AlphaVector, StageBounds, UpperBoundSet};
pub use error::{Error, Result};
pub use model::{parse_pomdp, random_model, serialize_pomdp, Belief, PomdpModel};
pub use par::parallel_available;
pub use sampling::{SamplingKind, SamplingStrategy};
pub use solver::{
    gap_at_b0, solve, solve_gpucb, solve_pbvi, target_gap, IterationRecord, RunMetrics, Solution, SolverConfig,
    TerminalStatus, UpperEngine,
};
