//! Point-based value iteration driver with a choice of upper-bound engine.

mod config;
mod engine;
mod metrics;

pub use config::{SolverConfig, UpperEngine};
pub use metrics::{IterationRecord, RunMetrics, TerminalStatus};

use crate::bounds::{lower_bound_value, StageBounds};
use crate::error::{Error, Result};
use crate::model::{Belief, PomdpModel};

/// Final bounds at the initial belief plus the full run history.
#[derive(Debug, Clone)]
pub struct Solution {
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub metrics: RunMetrics,
    /// Per-stage bounds at termination; empty when the run never started.
    pub stages: Vec<StageBounds>,
}

impl Solution {
    fn infeasible() -> Self {
        Solution {
            lb: f64::NAN,
            ub: f64::NAN,
            gap: f64::NAN,
            metrics: RunMetrics {
                records: Vec::new(),
                status: TerminalStatus::GridTooLarge,
            },
            stages: Vec::new(),
        }
    }
}

/// `10^ceil(log10 ub) / 10^rho`, or `10^-rho` when `ub <= 0`.
pub fn target_gap(ub_value: f64, rho: u32) -> f64 {
    let scale = 10f64.powi(-(rho as i32));
    if !(ub_value > 0.0) {
        return scale;
    }
    let mut p = ub_value.log10().ceil() as i32;
    // guard against log10 rounding just above an exact power
    if 10f64.powi(p - 1) >= ub_value {
        p -= 1;
    }
    if 10f64.powi(p) < ub_value {
        p += 1;
    }
    10f64.powi(p) * scale
}

/// Lower bound, stored upper bound and their difference at `b0`.
pub fn gap_at_b0(stages: &[StageBounds], b0: &Belief) -> (f64, f64, f64) {
    let first = &stages[0];
    let lb = lower_bound_value(&first.gamma, b0);
    let ub = first.upper.get(b0).unwrap_or_else(|| first.upper.project(b0));
    (lb, ub, ub - lb)
}

/// Runs the engine selected in `config`.
pub fn solve(model: &PomdpModel, config: &SolverConfig) -> Result<Solution> {
    engine::run(model, config)
}

/// Point-based value iteration with the sawtooth upper bound.
pub fn solve_pbvi(model: &PomdpModel, config: &SolverConfig) -> Result<Solution> {
    if config.ub_engine != UpperEngine::Sawtooth {
        return Err(Error::Config("solve_pbvi needs the sawtooth engine".into()));
    }
    engine::run(model, config)
}

/// Point-based value iteration with GP-UCB upper-bound projections.
pub fn solve_gpucb(model: &PomdpModel, config: &SolverConfig) -> Result<Solution> {
    if config.ub_engine != UpperEngine::GpUcb {
        return Err(Error::Config("solve_gpucb needs the gp-ucb engine".into()));
    }
    engine::run(model, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{exact_value, DEFAULT_EXACT_CAP};
    use crate::sampling::{SamplingKind, SamplingStrategy};
    use crate::testing::tiger;

    fn config(engine: UpperEngine, kind: SamplingKind) -> SolverConfig {
        SolverConfig {
            ub_engine: engine,
            strategy: SamplingStrategy { kind, ..SamplingStrategy::default() },
            time_limit: 30.0,
            ..SolverConfig::default()
        }
    }

    fn exact_at_b0(model: &PomdpModel) -> f64 {
        let stages = exact_value(model, model.horizon, DEFAULT_EXACT_CAP).unwrap();
        lower_bound_value(&stages[0], &model.initial_belief)
    }

    #[test]
    fn target_gap_examples() {
        assert!((target_gap(281.0, 5) - 0.01).abs() < 1e-15);
        assert!((target_gap(64.0, 5) - 0.001).abs() < 1e-15);
        assert!((target_gap(100.0, 5) - 0.001).abs() < 1e-15);
        assert!((target_gap(1000.0, 5) - 0.01).abs() < 1e-15);
        assert_eq!(target_gap(0.0, 5), 1e-5);
        assert_eq!(target_gap(-3.0, 2), 1e-2);
    }

    #[test]
    fn tiger_horizon_one_converges_immediately() {
        let m = tiger();
        for engine in [UpperEngine::Sawtooth, UpperEngine::GpUcb] {
            for kind in [SamplingKind::MaxGap, SamplingKind::Random, SamplingKind::FixedGrid] {
                let sol = solve(&m, &config(engine, kind)).unwrap();
                assert_eq!(sol.lb, -1.0);
                assert_eq!(sol.ub, -1.0);
                assert_eq!(sol.metrics.iterations(), 1);
                assert_eq!(sol.metrics.status, TerminalStatus::GapReached);
            }
        }
    }

    #[test]
    fn tiger_horizon_two_reaches_the_exact_value() {
        let m = tiger().with_horizon(2);
        let sol = solve_pbvi(&m, &config(UpperEngine::Sawtooth, SamplingKind::MaxGap)).unwrap();
        assert!((sol.lb + 2.0).abs() < 1e-6, "{}", sol.lb);
        assert!(sol.metrics.iterations() <= 5);
        assert_eq!(sol.metrics.status, TerminalStatus::GapReached);
    }

    #[test]
    fn engines_agree_with_the_exact_value_on_tiger() {
        for horizon in 1..=3 {
            let m = tiger().with_horizon(horizon);
            let exact = exact_at_b0(&m);
            for engine in [UpperEngine::Sawtooth, UpperEngine::GpUcb] {
                let sol = solve(&m, &config(engine, SamplingKind::MaxGap)).unwrap();
                assert!((sol.lb - exact).abs() <= 1e-4, "{engine:?} T={horizon}: {} vs {exact}", sol.lb);
                assert!(sol.ub - sol.lb <= 1e-3, "{engine:?} T={horizon}: gap {}", sol.gap);
            }
        }
    }

    #[test]
    fn bounds_are_monotone_and_consistent() {
        let m = crate::model::random_model(3, 2, 2, 3, 9);
        let sol = solve(&m, &config(UpperEngine::Sawtooth, SamplingKind::Random)).unwrap();
        let records = &sol.metrics.records;
        for pair in records.windows(2) {
            assert!(pair[1].lb >= pair[0].lb);
            assert!(pair[1].ub <= pair[0].ub);
            assert!(pair[1].wall_seconds >= pair[0].wall_seconds);
            assert!(pair[1].sawtooth_executions >= pair[0].sawtooth_executions);
        }
        for r in records {
            assert_eq!(r.gap, r.ub - r.lb);
        }
    }

    #[test]
    fn gp_engine_uses_fewer_sawtooth_projections() {
        let m = crate::model::random_model(4, 3, 3, 4, 21);
        let mut cfg = config(UpperEngine::Sawtooth, SamplingKind::MaxGap);
        cfg.max_iterations = Some(15);
        cfg.rho = 12;
        let saw = solve(&m, &cfg).unwrap();
        cfg.ub_engine = UpperEngine::GpUcb;
        let gp = solve(&m, &cfg).unwrap();
        let n = saw.metrics.iterations().min(gp.metrics.iterations());
        let count = |s: &Solution| s.metrics.records[n - 1].sawtooth_executions;
        assert!(count(&gp) <= count(&saw), "{} vs {}", count(&gp), count(&saw));
    }

    #[test]
    fn wrong_engine_is_a_config_error() {
        let m = tiger();
        assert!(matches!(
            solve_pbvi(&m, &config(UpperEngine::GpUcb, SamplingKind::MaxGap)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            solve_gpucb(&m, &config(UpperEngine::Sawtooth, SamplingKind::MaxGap)),
            Err(Error::Config(_))
        ));
        let bad = SolverConfig { time_limit: 0.0, ..SolverConfig::default() };
        assert!(matches!(solve(&m, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn oversized_fixed_grid_reports_status() {
        let m = crate::model::random_model(27, 3, 3, 10, 1);
        let sol = solve(&m, &config(UpperEngine::Sawtooth, SamplingKind::FixedGrid)).unwrap();
        assert_eq!(sol.metrics.status, TerminalStatus::GridTooLarge);
        assert!(sol.metrics.records.is_empty());
    }

    #[test]
    fn small_fixed_grid_completes() {
        let m = crate::model::random_model(5, 3, 3, 10, 1);
        let sol = solve(&m, &config(UpperEngine::Sawtooth, SamplingKind::FixedGrid)).unwrap();
        assert_ne!(sol.metrics.status, TerminalStatus::GridTooLarge);
        assert!(sol.gap >= -1e-9);
    }

    #[test]
    fn runs_are_deterministic() {
        let m = crate::model::random_model(3, 3, 2, 4, 2);
        for engine in [UpperEngine::Sawtooth, UpperEngine::GpUcb] {
            let mut cfg = config(engine, SamplingKind::Random);
            cfg.max_iterations = Some(20);
            cfg.seed = 42;
            let a = solve(&m, &cfg).unwrap();
            let b = solve(&m, &cfg).unwrap();
            let trace = |s: &Solution| s.metrics.records.iter().map(|r| (r.lb, r.ub, r.gap)).collect::<Vec<_>>();
            assert_eq!(trace(&a), trace(&b));
        }
    }
}
