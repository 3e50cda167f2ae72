use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{SolverConfig, UpperEngine};
use super::metrics::{IterationRecord, RunMetrics, TerminalStatus};
use super::{gap_at_b0, target_gap, Solution};
use crate::bounds::{
    backup, belief_key, lower_bound_value, mdp_corner_bounds, prune_dominated, sawtooth_project, upper_bound_backup,
    AlphaVector, SawtoothCounter, StageBounds, UpperBoundSet,
};
use crate::error::{Error, Result};
use crate::gp::{gpr_fit, signal_variance_for, GprState};
use crate::model::{Belief, PomdpModel};
use crate::par::map_ordered;
use crate::sampling::{fixed_grid, grid_size, sample_max_gap, sample_random, uniform_simplex, SamplingKind};

/// A backed-up vector must beat the current bound by this much to be kept.
const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

struct Run<'m> {
    model: &'m PomdpModel,
    config: &'m SolverConfig,
    stages: Vec<StageBounds>,
    keys: Vec<HashSet<Vec<i64>>>,
    gps: Vec<Option<GprState>>,
    initial_supports: Vec<Vec<Belief>>,
    counter: SawtoothCounter,
    sample_rng: ChaCha8Rng,
    refresh_rng: ChaCha8Rng,
}

/// What one backward pass changed.
#[derive(Default)]
struct PassOutcome {
    changed: bool,
}

pub(super) fn run(model: &PomdpModel, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let horizon = model.horizon;
    assert!(horizon >= 1, "horizon must be at least 1");

    let grid = if config.strategy.kind == SamplingKind::FixedGrid {
        match feasible_grid(model, config) {
            Ok(grid) => Some(grid),
            Err(Error::GridTooLarge { requested, cap }) => {
                log::warn!("fixed grid infeasible: {requested} evaluations per sweep exceed cap {cap}");
                return Ok(Solution::infeasible());
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let mut run = Run::new(model, config);
    if let Some(grid) = &grid {
        for t in 0..horizon {
            for b in grid {
                run.insert_belief(t, b.clone());
            }
        }
    }
    run.backward_pass(None)?;

    let mut records = Vec::new();
    let mut gaps = vec![gap_at_b0(&run.stages, &model.initial_belief).2];
    let status = loop {
        let iteration = records.len() + 1;
        let new_beliefs = run.expand();
        let full_refresh = run.full_refresh_due(iteration, &gaps);
        let outcome = run.backward_pass(Some((&new_beliefs, full_refresh)))?;

        let (lb, ub, gap) = gap_at_b0(&run.stages, &model.initial_belief);
        let record = IterationRecord {
            iteration,
            wall_seconds: start.elapsed().as_secs_f64(),
            lb,
            ub,
            gap,
            sawtooth_executions: run.counter.get(),
            support_sizes: run.gps.iter().map(|g| g.as_ref().map_or(0, GprState::len)).collect(),
            belief_set_sizes: run.stages.iter().map(|s| s.beliefs.len()).collect(),
        };
        log::debug!("iteration {iteration}: lb {lb} ub {ub} gap {gap}");
        records.push(record);
        gaps.push(gap);

        let threshold = config.epsilon.max(target_gap(ub, config.rho));
        let stalled = !outcome.changed && (config.ub_engine == UpperEngine::Sawtooth || full_refresh);
        if gap <= threshold {
            break TerminalStatus::GapReached;
        }
        if stalled {
            break TerminalStatus::Stalled;
        }
        if config.max_iterations.is_some_and(|m| iteration >= m) {
            break TerminalStatus::IterationLimit;
        }
        if start.elapsed().as_secs_f64() >= config.time_limit {
            break TerminalStatus::TimeLimit;
        }
    };

    let (lb, ub, gap) = gap_at_b0(&run.stages, &model.initial_belief);
    Ok(Solution {
        lb,
        ub,
        gap,
        metrics: RunMetrics { records, status },
        stages: run.stages,
    })
}

/// The fixed grid, unless it or one sweep over it is too large to attempt.
fn feasible_grid(model: &PomdpModel, config: &SolverConfig) -> Result<Vec<Belief>> {
    let (ns, k, cap) = (model.num_states(), config.strategy.grid_resolution, config.grid_cap);
    let per_sweep =
        grid_size(ns, k) * model.horizon as f64 * model.num_actions() as f64 * model.num_observations() as f64;
    if per_sweep > cap as f64 {
        return Err(Error::GridTooLarge { requested: per_sweep, cap });
    }
    fixed_grid(ns, k, cap)
}

impl<'m> Run<'m> {
    fn new(model: &'m PomdpModel, config: &'m SolverConfig) -> Self {
        let horizon = model.horizon;
        let corner_bounds = mdp_corner_bounds(model);
        let mut sample_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut refresh_rng = ChaCha8Rng::seed_from_u64(config.seed);
        refresh_rng.set_stream(1);

        let mut run = Run {
            model,
            config,
            stages: corner_bounds
                .into_iter()
                .map(|corners| StageBounds {
                    gamma: Vec::new(),
                    upper: UpperBoundSet::new(corners),
                    beliefs: Vec::new(),
                })
                .collect(),
            keys: vec![HashSet::new(); horizon],
            gps: vec![None; horizon],
            initial_supports: vec![Vec::new(); horizon],
            counter: SawtoothCounter::new(),
            sample_rng: ChaCha8Rng::seed_from_u64(0),
            refresh_rng,
        };
        for t in 0..horizon {
            for b in model.corner_beliefs() {
                run.insert_belief(t, b);
            }
            run.insert_belief(t, model.initial_belief.clone());
            run.initial_supports[t] = if config.random_initial_supports {
                (0..=model.num_states()).map(|_| uniform_simplex(model.num_states(), &mut sample_rng)).collect()
            } else {
                run.stages[t].beliefs.clone()
            };
        }
        run.sample_rng = sample_rng;
        run
    }

    fn insert_belief(&mut self, t: usize, b: Belief) -> bool {
        if self.keys[t].insert(belief_key(&b)) {
            self.stages[t].beliefs.push(b);
            true
        } else {
            false
        }
    }

    /// Upper estimate at `stage` used by backups and sampling: the stored value
    /// when `b` is known, otherwise the engine's projection.
    fn upper_estimate(&self, stage: usize, b: &Belief) -> f64 {
        let bounds = &self.stages[stage];
        if let Some(v) = bounds.upper.get(b) {
            return v;
        }
        match (self.config.ub_engine, &self.gps[stage]) {
            (UpperEngine::GpUcb, Some(gp)) if !gp.is_empty() => gp.ucb(b, self.config.eta),
            _ => sawtooth_project(&bounds.upper, b, &self.counter),
        }
    }

    /// Adds this iteration's sampled beliefs; returns the new ones per stage.
    fn expand(&mut self) -> Vec<Vec<Belief>> {
        let horizon = self.model.horizon;
        let samples = match self.config.strategy.kind {
            SamplingKind::MaxGap => sample_max_gap(self.model, &self.stages, &self.model.initial_belief, |t, b| {
                self.upper_estimate(t, b)
            }),
            SamplingKind::Random => sample_random(self.model.num_states(), horizon, &mut self.sample_rng),
            SamplingKind::FixedGrid => Vec::new(),
        };
        let mut fresh = vec![Vec::new(); horizon];
        for (t, b) in samples {
            if self.insert_belief(t, b.clone()) {
                fresh[t].push(b);
            }
        }
        fresh
    }

    fn full_refresh_due(&self, iteration: usize, gaps: &[f64]) -> bool {
        let config = self.config;
        if iteration <= config.initial_phase_iters || iteration.is_multiple_of(config.periodic_check_interval) {
            return true;
        }
        let n = gaps.len();
        if n < 2 {
            return true;
        }
        let ub = self.upper_estimate(0, &self.model.initial_belief);
        let epsilon = config.epsilon.max(target_gap(ub, config.rho));
        (gaps[n - 1] - gaps[n - 2]).abs() > 100.0 * epsilon
    }

    /// One sweep from the last stage to the first. `gp_update` carries the
    /// new beliefs and refresh mode; `None` skips the GP work (initialization,
    /// where every projection falls back to sawtooth).
    fn backward_pass(&mut self, gp_update: Option<(&[Vec<Belief>], bool)>) -> Result<PassOutcome> {
        let mut outcome = PassOutcome::default();
        for t in (0..self.model.horizon).rev() {
            outcome.changed |= self.update_stage(t);
            if let Some((fresh, full)) = gp_update {
                if self.config.ub_engine == UpperEngine::GpUcb && t > 0 {
                    outcome.changed |= self
                        .update_gp(t, &fresh[t], full)
                        .map_err(|e| Error::Stage { stage: t, source: Box::new(e) })?;
                }
            }
        }
        Ok(outcome)
    }

    /// Lower- and upper-bound backups at every belief of stage `t`.
    fn update_stage(&mut self, t: usize) -> bool {
        let model = self.model;
        let this = &*self;
        let gamma = &this.stages[t].gamma;
        let gamma_next: &[AlphaVector] = if t + 1 < model.horizon { &this.stages[t + 1].gamma } else { &[] };
        let results = map_ordered(&this.stages[t].beliefs, this.config.parallel, |b| {
            let alpha = backup(model, b, t, gamma_next);
            let improves = gamma.is_empty() || alpha.value_at(b) > lower_bound_value(gamma, b) + IMPROVEMENT_TOLERANCE;
            let ub = upper_bound_backup(model, b, t, |next| this.upper_estimate(t + 1, next));
            (improves.then_some(alpha), ub)
        });

        let mut changed = false;
        let stage = &mut self.stages[t];
        let mut added = Vec::new();
        for (b, (alpha, ub)) in stage.beliefs.iter().zip(results) {
            if let Some(alpha) = alpha {
                added.push(alpha);
            }
            changed |= stage.upper.update(b, ub);
        }
        if !added.is_empty() {
            changed = true;
            let mut gamma = std::mem::take(&mut stage.gamma);
            gamma.extend(added);
            stage.gamma = prune_dominated(gamma);
        }
        changed
    }

    /// Refreshes the stage-`t` GP targets and admits new supports by ALD.
    fn update_gp(&mut self, t: usize, fresh: &[Belief], full: bool) -> Result<bool> {
        let mut changed = false;
        if full || self.gps[t].is_none() {
            let supports = match &self.gps[t] {
                Some(gp) => gp.supports().to_vec(),
                None => self.initial_supports[t].clone(),
            };
            let upper = &self.stages[t].upper;
            let targets: Vec<f64> = supports.iter().map(|b| sawtooth_project(upper, b, &self.counter)).collect();
            let unchanged = self.gps[t].as_ref().is_some_and(|gp| gp.targets() == targets.as_slice());
            if !unchanged {
                let mut gp = self.fit(supports, targets)?;
                gp.stage = t;
                self.gps[t] = Some(gp);
                changed = true;
            }
        } else if let Some(gp) = self.gps[t].as_mut() {
            let i = self.refresh_rng.random_range(0..gp.len());
            let target = sawtooth_project(&self.stages[t].upper, &gp.supports()[i], &self.counter);
            if target != gp.targets()[i] {
                gp.refresh_target(i, target);
                changed = true;
            }
        }

        let gp = self.gps[t].as_mut().expect("fitted above");
        for b in fresh {
            if gp.ald_delta(b) <= self.config.nu {
                continue;
            }
            let target = sawtooth_project(&self.stages[t].upper, b, &self.counter);
            match gp.expand_support(b.clone(), target) {
                Ok(()) => changed = true,
                Err(Error::DuplicateSupport(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(changed)
    }

    fn fit(&self, supports: Vec<Belief>, targets: Vec<f64>) -> Result<GprState> {
        let sv = signal_variance_for(&targets);
        let noise = self.config.noise_variance.unwrap_or(1e-4 * sv);
        gpr_fit(self.config.kernel.with_signal_variance(sv), supports, targets, noise)
    }
}
