use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{Belief, PomdpModel};

fn dirichlet_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
    row
}

/// A seeded random model with Dirichlet(1) transition and observation rows,
/// integer rewards in `[-10, 10]` and a uniform initial belief.
///
/// Used as a fixture for oracle comparisons on small instances.
pub fn random_model(
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    horizon: usize,
    seed: u64,
) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, na, no) = (num_states, num_actions, num_observations);
    let mut transition = Vec::with_capacity(na * ns * ns);
    for _ in 0..na * ns {
        transition.extend(dirichlet_row(&mut rng, ns));
    }
    let mut observation = Vec::with_capacity(na * ns * no);
    for _ in 0..na * ns {
        observation.extend(dirichlet_row(&mut rng, no));
    }
    let reward = (0..na * ns).map(|_| rng.random_range(-10..=10) as f64).collect();
    let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect();
    PomdpModel::new(
        names("s", ns),
        names("a", na),
        names("o", no),
        transition,
        observation,
        reward,
        horizon,
        Belief::uniform(ns),
    )
    .expect("random rows are normalized")
}
