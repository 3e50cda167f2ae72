//! Lower-bound alpha-vector machinery, the sawtooth upper bound, upper-bound
//! backups and the exact enumeration oracle.

mod exact;
mod sawtooth;
mod upper;

pub use exact::{exact_value, DEFAULT_EXACT_CAP};
pub(crate) use sawtooth::belief_key;
pub use sawtooth::{sawtooth_project, SawtoothCounter, UpperBoundSet};
pub use upper::{mdp_corner_bounds, upper_action_values, upper_bound_backup};

use crate::model::{dot, Belief, PomdpModel};

/// A linear function over beliefs, tagged with the action whose backup produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub action: usize,
}

impl AlphaVector {
    pub fn new(values: Vec<f64>, action: usize) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        AlphaVector { values, action }
    }

    pub fn value_at(&self, b: &Belief) -> f64 {
        b.dot(&self.values)
    }
}

/// Per-stage solver state: the lower-bound vectors, the upper-bound point set
/// and the sampled beliefs.
#[derive(Debug, Clone)]
pub struct StageBounds {
    pub gamma: Vec<AlphaVector>,
    pub upper: UpperBoundSet,
    pub beliefs: Vec<Belief>,
}

impl StageBounds {
    pub fn lower_value(&self, b: &Belief) -> f64 {
        lower_bound_value(&self.gamma, b)
    }
}

/// Index and value of the best vector at `weights` (ties go to the lowest index).
fn best_vector(gamma: &[AlphaVector], weights: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, alpha) in gamma.iter().enumerate() {
        let v = dot(weights, &alpha.values);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// `max_alpha b . alpha`. Panics on an empty set.
pub fn lower_bound_value(gamma: &[AlphaVector], b: &Belief) -> f64 {
    assert!(!gamma.is_empty(), "lower bound needs at least one alpha-vector");
    best_vector(gamma, b.probs()).1
}

/// Point-based Bellman backup at `b` for stage `stage`.
///
/// At the last stage (`stage + 1 == horizon`) the candidate for each action is
/// its reward vector. Otherwise each observation branch contributes the
/// projection of the next-stage vector that is best at the unnormalized
/// successor; branches with zero probability are skipped.
pub fn backup(model: &PomdpModel, b: &Belief, stage: usize, gamma_next: &[AlphaVector]) -> AlphaVector {
    let terminal = stage + 1 >= model.horizon;
    let mut best: Option<(f64, AlphaVector)> = None;
    for a in 0..model.num_actions() {
        let mut g = model.reward_vector(a).to_vec();
        if !terminal {
            for o in 0..model.num_observations() {
                let weights = model.successor_weights(b, a, o);
                if weights.iter().sum::<f64>() <= 0.0 {
                    continue;
                }
                let (idx, _) = best_vector(gamma_next, &weights);
                let projected = model.project_vector(&gamma_next[idx].values, a, o);
                g.iter_mut().zip(&projected).for_each(|(x, p)| *x += p);
            }
        }
        let value = b.dot(&g);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, AlphaVector::new(g, a)));
        }
    }
    best.expect("model has at least one action").1
}

fn dominates_or_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Removes duplicates and pointwise-dominated vectors, keeping the first of
/// any group of equal vectors. Order of the survivors is preserved.
pub fn prune_dominated(gamma: Vec<AlphaVector>) -> Vec<AlphaVector> {
    let mut kept: Vec<AlphaVector> = Vec::with_capacity(gamma.len());
    for alpha in gamma {
        if kept.iter().any(|k| dominates_or_equal(&k.values, &alpha.values)) {
            continue;
        }
        kept.retain(|k| !dominates_or_equal(&alpha.values, &k.values));
        kept.push(alpha);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::tiger;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn av(values: &[f64]) -> AlphaVector {
        AlphaVector::new(values.to_vec(), 0)
    }

    fn tiger_terminal() -> Vec<AlphaVector> {
        vec![av(&[10.0, -100.0]), av(&[-100.0, 10.0]), av(&[-1.0, -1.0])]
    }

    #[test]
    fn lower_bound_examples() {
        let half = Belief::uniform(2);
        assert_eq!(lower_bound_value(&[av(&[3.0, 3.0])], &half), 3.0);
        assert_eq!(lower_bound_value(&tiger_terminal(), &half), -1.0);
        assert_eq!(lower_bound_value(&tiger_terminal(), &Belief::corner(2, 0)), 10.0);
    }

    #[test]
    fn terminal_backup_prefers_listening_at_the_center() {
        let m = tiger().with_horizon(2);
        let alpha = backup(&m, &Belief::uniform(2), 1, &[]);
        assert_eq!(alpha.values, vec![-1.0, -1.0]);
        assert_eq!(alpha.action, 0);
    }

    #[test]
    fn two_stage_backup_listens_twice() {
        let m = tiger().with_horizon(2);
        let terminal: Vec<_> = (0..3).map(|a| AlphaVector::new(m.reward_vector(a).to_vec(), a)).collect();
        let alpha = backup(&m, &Belief::uniform(2), 0, &terminal);
        assert_eq!(alpha.action, 0);
        assert!((alpha.value_at(&Belief::uniform(2)) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_action_backup_ignores_the_belief() {
        let m = crate::testing::deterministic_chain(3).with_horizon(1);
        for b in [Belief::uniform(3), Belief::corner(3, 1)] {
            let alpha = backup(&m, &b, 0, &[]);
            assert_eq!(alpha.values, m.reward_vector(0));
        }
    }

    #[test]
    fn prune_examples() {
        assert_eq!(prune_dominated(vec![av(&[1.0, 1.0]), av(&[0.0, 0.0])]), vec![av(&[1.0, 1.0])]);
        let incomparable = vec![av(&[10.0, -100.0]), av(&[-100.0, 10.0])];
        assert_eq!(prune_dominated(incomparable.clone()), incomparable);
    }

    #[test]
    fn prune_removes_duplicates_and_keeps_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base: Vec<AlphaVector> = (0..50)
            .map(|_| av(&(0..3).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<_>>()))
            .collect();
        let mut doubled = base.clone();
        doubled.extend(base.iter().cloned());
        let pruned = prune_dominated(doubled.clone());
        assert!(pruned.len() <= base.len());
        for i in 0..pruned.len() {
            for j in i + 1..pruned.len() {
                assert_ne!(pruned[i], pruned[j]);
            }
        }
        for _ in 0..1000 {
            let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let b = Belief::from_weights(w);
            assert_eq!(lower_bound_value(&doubled, &b), lower_bound_value(&pruned, &b));
        }
    }

    #[test]
    fn backup_is_locally_optimal_over_the_belief_set() {
        let m = crate::model::random_model(3, 3, 2, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beliefs: Vec<Belief> = (0..12)
            .map(|_| Belief::from_weights((0..3).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let next: Vec<AlphaVector> = (0..5)
            .map(|_| av(&(0..3).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>()))
            .collect();
        let backed: Vec<AlphaVector> = beliefs.iter().map(|b| backup(&m, b, 1, &next)).collect();
        for (b, alpha) in beliefs.iter().zip(&backed) {
            for other in &backed {
                assert!(alpha.value_at(b) >= other.value_at(b) - 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn prune_preserves_lower_bound(
            vectors in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..30),
            weights in prop::collection::vec(prop::collection::vec(0.001f64..1.0, 3), 1..20),
        ) {
            let gamma: Vec<AlphaVector> = vectors.iter().map(|v| av(v)).collect();
            let pruned = prune_dominated(gamma.clone());
            for w in weights {
                let b = Belief::from_weights(w);
                prop_assert_eq!(lower_bound_value(&gamma, &b), lower_bound_value(&pruned, &b));
            }
        }
    }
}
