//! Belief-set expansion strategies: max-gap forward sampling, uniform random
//! sampling and a fixed regular grid.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::bounds::{upper_action_values, StageBounds};
use crate::error::{Error, Result};
use crate::model::{Belief, PomdpModel};

pub const DEFAULT_GRID_RESOLUTION: usize = 3;
pub const DEFAULT_GRID_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingKind {
    MaxGap,
    Random,
    FixedGrid,
}

impl SamplingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingKind::MaxGap => "max-gap",
            SamplingKind::Random => "random",
            SamplingKind::FixedGrid => "fixed-grid",
        }
    }
}

impl std::str::FromStr for SamplingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max-gap" => Ok(SamplingKind::MaxGap),
            "random" => Ok(SamplingKind::Random),
            "fixed-grid" => Ok(SamplingKind::FixedGrid),
            other => Err(format!("unknown sampling strategy `{other}`")),
        }
    }
}

/// Which expansion method to use. Randomness comes from the solver seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingStrategy {
    pub kind: SamplingKind,
    /// Grid denominator; only used by [`SamplingKind::FixedGrid`].
    pub grid_resolution: usize,
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy {
            kind: SamplingKind::MaxGap,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
        }
    }
}

/// One forward trajectory from `b0` following the action with the best upper
/// bound and then the observation whose successor has the widest bound gap.
///
/// `upper(t, b)` is the current upper estimate at stage `t`. Returns one
/// belief for every stage `1..horizon`, possibly already present in the set.
pub fn sample_max_gap<U>(model: &PomdpModel, stages: &[StageBounds], b0: &Belief, upper: U) -> Vec<(usize, Belief)>
where
    U: Fn(usize, &Belief) -> f64,
{
    let mut out = Vec::with_capacity(model.horizon.saturating_sub(1));
    let mut b = b0.clone();
    for t in 0..model.horizon.saturating_sub(1) {
        let q = upper_action_values(model, &b, t, |next| upper(t + 1, next));
        let mut action = 0;
        for (a, &v) in q.iter().enumerate() {
            if v > q[action] {
                action = a;
            }
        }
        let mut best: Option<(f64, Belief)> = None;
        for succ in model.successors(&b, action) {
            let gap = upper(t + 1, &succ.belief) - stages[t + 1].lower_value(&succ.belief);
            if best.as_ref().is_none_or(|(g, _)| gap > *g) {
                best = Some((gap, succ.belief));
            }
        }
        let (_, next) = best.expect("observation probabilities sum to one");
        out.push((t + 1, next.clone()));
        b = next;
    }
    out
}

/// A uniform draw from the probability simplex (symmetric Dirichlet(1)).
pub fn uniform_simplex<R: Rng + ?Sized>(num_states: usize, rng: &mut R) -> Belief {
    let weights: Vec<f64> = (0..num_states).map(|_| Exp1.sample(rng)).collect();
    Belief::from_weights(weights)
}

/// One uniformly drawn belief for every stage `1..horizon`.
pub fn sample_random<R: Rng + ?Sized>(num_states: usize, horizon: usize, rng: &mut R) -> Vec<(usize, Belief)> {
    (1..horizon).map(|t| (t, uniform_simplex(num_states, rng))).collect()
}

/// Number of points in the resolution-`k` grid over `num_states` states, as a float
/// so that oversized grids can be reported without overflow.
pub fn grid_size(num_states: usize, resolution: usize) -> f64 {
    // C(k + n - 1, n - 1)
    let top = (resolution + num_states - 1) as f64;
    let r = (num_states - 1).min(resolution);
    (0..r).fold(1.0, |acc, i| acc * (top - i as f64) / (i as f64 + 1.0)).round()
}

/// Every belief whose entries are multiples of `1/resolution`.
pub fn fixed_grid(num_states: usize, resolution: usize, cap: usize) -> Result<Vec<Belief>> {
    assert!(num_states >= 1 && resolution >= 1);
    let count = grid_size(num_states, resolution);
    if count > cap as f64 {
        return Err(Error::GridTooLarge { requested: count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut parts = vec![0usize; num_states];
    fill_grid(&mut parts, 0, resolution, resolution, &mut out);
    Ok(out)
}

fn fill_grid(parts: &mut [usize], pos: usize, remaining: usize, k: usize, out: &mut Vec<Belief>) {
    if pos + 1 == parts.len() {
        parts[pos] = remaining;
        let probs = parts.iter().map(|&p| p as f64 / k as f64).collect();
        out.push(Belief::from_weights(probs));
        return;
    }
    for take in (0..=remaining).rev() {
        parts[pos] = take;
        fill_grid(parts, pos + 1, remaining - take, k, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{AlphaVector, UpperBoundSet};
    use crate::testing::tiger;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_examples() {
        let g = fixed_grid(2, 2, DEFAULT_GRID_CAP).unwrap();
        let probs: Vec<&[f64]> = g.iter().map(|b| b.probs()).collect();
        assert_eq!(probs, vec![&[1.0, 0.0][..], &[0.5, 0.5], &[0.0, 1.0]]);
        let corners = fixed_grid(3, 1, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(corners.len(), 3);
        assert!(corners.iter().all(|b| b.corner_index().is_some()));
        let g = fixed_grid(3, 4, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.len(), 15);
        assert!(g.iter().all(|b| (b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn grid_counts_match_the_binomial() {
        for (n, k, expected) in [(5, 3, 35.0), (7, 3, 84.0), (27, 3, 3654.0), (90, 3, 125_580.0), (3, 4, 15.0)] {
            assert_eq!(grid_size(n, k), expected);
        }
    }

    #[test]
    fn grid_is_duplicate_free_with_all_corners() {
        let g = fixed_grid(4, 3, DEFAULT_GRID_CAP).unwrap();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                assert!(!g[i].same_point(&g[j]));
            }
        }
        for s in 0..4 {
            assert!(g.iter().any(|b| b.corner_index() == Some(s)));
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let err = fixed_grid(60, 5, DEFAULT_GRID_CAP).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
    }

    #[test]
    fn random_samples_are_reproducible() {
        let a = sample_random(3, 5, &mut ChaCha8Rng::seed_from_u64(4));
        let b = sample_random(3, 5, &mut ChaCha8Rng::seed_from_u64(4));
        let c = sample_random(3, 5, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.iter().map(|(t, _)| *t).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn random_samples_have_the_dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let b = uniform_simplex(3, &mut rng);
            for s in 0..3 {
                mean[s] += b.probs()[s] / n as f64;
            }
        }
        assert!(mean.iter().all(|m| (m - 1.0 / 3.0).abs() < 0.01), "{mean:?}");
    }

    fn tiger_stages(horizon: usize) -> Vec<StageBounds> {
        let m = tiger().with_horizon(horizon);
        (0..horizon)
            .map(|_| StageBounds {
                gamma: (0..3).map(|a| AlphaVector::new(m.reward_vector(a).to_vec(), a)).collect(),
                upper: UpperBoundSet::new(vec![10.0, 10.0]),
                beliefs: m.corner_beliefs(),
            })
            .collect()
    }

    #[test]
    fn max_gap_first_step_is_reachable() {
        let m = tiger().with_horizon(2);
        let stages = tiger_stages(2);
        let out = sample_max_gap(&m, &stages, &m.initial_belief, |t, b| stages[t].upper.project(b));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, 1);
        let reachable = [[0.85, 0.15], [0.15, 0.85], [0.5, 0.5]];
        assert!(reachable
            .iter()
            .any(|r| out[0].1.linf_distance(&Belief::new(r.to_vec()).unwrap()) < 1e-12));
    }

    #[test]
    fn max_gap_is_deterministic() {
        let m = tiger().with_horizon(4);
        let stages = tiger_stages(4);
        let run = || sample_max_gap(&m, &stages, &m.initial_belief, |t, b| stages[t].upper.project(b));
        assert_eq!(run(), run());
        assert_eq!(run().len(), 3);
    }

    #[test]
    fn max_gap_samples_are_reachable() {
        let m = &crate::model::random_model(3, 2, 2, 4, 13);
        let mut reachable = vec![vec![m.initial_belief.clone()]];
        for t in 1..4 {
            let next = reachable[t - 1]
                .iter()
                .flat_map(|b| (0..2).flat_map(move |a| m.successors(b, a)).map(|s| s.belief))
                .collect();
            reachable.push(next);
        }
        let mut stages: Vec<StageBounds> = (0..4)
            .map(|_| StageBounds {
                gamma: (0..2).map(|a| AlphaVector::new(m.reward_vector(a).to_vec(), a)).collect(),
                upper: UpperBoundSet::new(vec![40.0; 3]),
                beliefs: Vec::new(),
            })
            .collect();
        for round in 0..5 {
            let out = sample_max_gap(m, &stages, &m.initial_belief, |t, b| stages[t].upper.project(b));
            for (t, b) in &out {
                assert!(reachable[*t].iter().any(|r| r.linf_distance(b) <= 1e-12), "round {round} stage {t}");
            }
            // lower the stored bound along the path so the next round explores elsewhere
            for (t, b) in out {
                let v = stages[t].lower_value(&b);
                stages[t].upper.update(&b, v);
            }
        }
    }
}
