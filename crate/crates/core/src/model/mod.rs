//! POMDP domain types and exact belief arithmetic.
//!
//! Tensors are stored dense and action-major:
//! `transition[a][s][s']`, `observation[a][s'][o]`, `reward[a][s]`.
//! A combined tensor `joint[a][o][s][s'] = T(s'|s,a) O(o|a,s')` is built once
//! so that belief updates and alpha-vector projections are single passes.

mod parse;
mod random;

pub use parse::{parse_pomdp, serialize_pomdp};
pub use random::random_model;

use crate::error::{Error, Result};

/// Tolerance for accepting a belief or probability row before renormalizing.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Two beliefs closer than this in the max norm are treated as the same point.
pub const BELIEF_EPSILON: f64 = 1e-12;

/// A probability distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    /// Builds a belief, clamping float noise below zero and renormalizing.
    ///
    /// Entries below `-1e-12`, non-finite entries, or a total further than
    /// `1e-6` from one are rejected.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty probability vector".into()));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -BELIEF_EPSILON {
                return Err(Error::InvalidBelief(format!("entry {p} out of range")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Belief { probs })
    }

    /// Normalizes a nonnegative, nonzero weight vector into a belief.
    pub(crate) fn from_weights(mut weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        debug_assert!(sum > 0.0);
        weights.iter_mut().for_each(|w| *w /= sum);
        Belief { probs: weights }
    }

    pub fn uniform(num_states: usize) -> Self {
        Belief {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    /// The unit vector placing all mass on `state`.
    pub fn corner(num_states: usize, state: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        Belief { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the state holding all the mass, if this is a corner belief.
    pub fn corner_index(&self) -> Option<usize> {
        let idx = self.probs.iter().position(|&p| p > 1.0 - BELIEF_EPSILON)?;
        self.probs
            .iter()
            .enumerate()
            .all(|(s, &p)| s == idx || p <= BELIEF_EPSILON)
            .then_some(idx)
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        dot(&self.probs, values)
    }

    pub fn linf_distance(&self, other: &Belief) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_point(&self, other: &Belief) -> bool {
        self.linf_distance(other) <= BELIEF_EPSILON
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A finite-horizon, undiscounted POMDP.
#[derive(Debug, Clone)]
pub struct PomdpModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `transition[(a * S + s) * S + s']`
    transition: Vec<f64>,
    /// `observation[(a * S + s') * O + o]`
    observation: Vec<f64>,
    /// `reward[a * S + s]`
    reward: Vec<f64>,
    /// `joint[((a * O + o) * S + s) * S + s']`
    joint: Vec<f64>,
    pub horizon: usize,
    pub initial_belief: Belief,
    /// Discount read from the file, if any. Solving always uses 1.0.
    pub file_discount: Option<f64>,
}

impl PomdpModel {
    /// Assembles and validates a model from dense tensors laid out as
    /// `transition[a][s][s']`, `observation[a][s'][o]` and `reward[a][s]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        horizon: usize,
        initial_belief: Belief,
    ) -> Result<Self> {
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        if ns == 0 || na == 0 || no == 0 {
            return Err(Error::Config("model needs at least one state, action and observation".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if transition.len() != na * ns * ns
            || observation.len() != na * ns * no
            || reward.len() != na * ns
            || initial_belief.len() != ns
        {
            return Err(Error::Config("tensor dimensions do not match the model sizes".into()));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("rewards must be finite".into()));
        }
        let mut model = PomdpModel {
            states,
            actions,
            observations,
            transition,
            observation,
            reward,
            joint: Vec::new(),
            horizon,
            initial_belief,
            file_discount: None,
        };
        model.validate_rows()?;
        model.rebuild_joint();
        Ok(model)
    }

    fn validate_rows(&mut self) -> Result<()> {
        let (ns, no) = (self.num_states(), self.num_observations());
        for a in 0..self.num_actions() {
            for s in 0..ns {
                let start = (a * ns + s) * ns;
                let label = format!("{} : {}", self.actions[a], self.states[s]);
                normalize_row(&mut self.transition[start..start + ns], "T", label)?;
            }
            for s2 in 0..ns {
                let start = (a * ns + s2) * no;
                let label = format!("{} : {}", self.actions[a], self.states[s2]);
                normalize_row(&mut self.observation[start..start + no], "O", label)?;
            }
        }
        Ok(())
    }

    fn rebuild_joint(&mut self) {
        let (ns, na, no) = (self.num_states(), self.num_actions(), self.num_observations());
        let mut joint = vec![0.0; na * no * ns * ns];
        for a in 0..na {
            for o in 0..no {
                for s in 0..ns {
                    for s2 in 0..ns {
                        joint[((a * no + o) * ns + s) * ns + s2] =
                            self.transition(s, a, s2) * self.observation_prob(a, s2, o);
                    }
                }
            }
        }
        self.joint = joint;
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        assert!(horizon >= 1, "horizon must be at least 1");
        self.horizon = horizon;
        self
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    /// Always 1.0: the solvers work on the undiscounted finite-horizon problem.
    pub fn discount(&self) -> f64 {
        1.0
    }

    /// P(s' | s, a)
    pub fn transition(&self, s: usize, a: usize, s2: usize) -> f64 {
        let ns = self.num_states();
        self.transition[(a * ns + s) * ns + s2]
    }

    /// P(o | a, s')
    pub fn observation_prob(&self, a: usize, s2: usize, o: usize) -> f64 {
        self.observation[(a * self.num_states() + s2) * self.num_observations() + o]
    }

    /// R(s, a)
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[a * self.num_states() + s]
    }

    /// The reward vector R(., a).
    pub fn reward_vector(&self, a: usize) -> &[f64] {
        let ns = self.num_states();
        &self.reward[a * ns..(a + 1) * ns]
    }

    /// Row-major `|S| x |S|` block with entries `P(s'|s,a) P(o|a,s')`.
    pub fn joint_block(&self, a: usize, o: usize) -> &[f64] {
        let ns = self.num_states();
        let start = (a * self.num_observations() + o) * ns * ns;
        &self.joint[start..start + ns * ns]
    }

    /// Unnormalized successor `b'(s') = sum_s b(s) P(s'|s,a) P(o|a,s')`;
    /// its total is `P(o|b,a)`.
    pub fn successor_weights(&self, b: &Belief, a: usize, o: usize) -> Vec<f64> {
        let ns = self.num_states();
        let block = self.joint_block(a, o);
        let mut out = vec![0.0; ns];
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            let row = &block[s * ns..(s + 1) * ns];
            for (acc, &m) in out.iter_mut().zip(row) {
                *acc += bs * m;
            }
        }
        out
    }

    /// Projects a next-stage vector back through action `a` and observation `o`:
    /// `g(s) = sum_s' P(s'|s,a) P(o|a,s') alpha(s')`.
    pub fn project_vector(&self, alpha: &[f64], a: usize, o: usize) -> Vec<f64> {
        let ns = self.num_states();
        self.joint_block(a, o)
            .chunks_exact(ns)
            .map(|row| dot(row, alpha))
            .collect()
    }

    /// P(o | b, a)
    pub fn obs_prob(&self, b: &Belief, a: usize, o: usize) -> f64 {
        self.successor_weights(b, a, o).iter().sum()
    }

    /// Bayes update of `b` after taking `a` and observing `o`.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Result<Belief> {
        let weights = self.successor_weights(b, a, o);
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityObservation {
                action: a,
                observation: o,
            });
        }
        Ok(Belief::from_weights(weights))
    }

    /// All successors of `b` under action `a` with their observation
    /// probabilities; zero-probability observations are omitted.
    pub fn successors(&self, b: &Belief, a: usize) -> Vec<Successor> {
        (0..self.num_observations())
            .filter_map(|o| {
                let weights = self.successor_weights(b, a, o);
                let prob: f64 = weights.iter().sum();
                (prob > 0.0).then(|| Successor {
                    observation: o,
                    prob,
                    belief: Belief::from_weights(weights),
                })
            })
            .collect()
    }

    /// The corner beliefs `w_s` in state order.
    pub fn corner_beliefs(&self) -> Vec<Belief> {
        let ns = self.num_states();
        (0..ns).map(|s| Belief::corner(ns, s)).collect()
    }

    pub(crate) fn transition_tensor(&self) -> &[f64] {
        &self.transition
    }

    pub(crate) fn observation_tensor(&self) -> &[f64] {
        &self.observation
    }

    pub(crate) fn reward_tensor(&self) -> &[f64] {
        &self.reward
    }
}

/// One observation branch of a belief update.
#[derive(Debug, Clone)]
pub struct Successor {
    pub observation: usize,
    pub prob: f64,
    pub belief: Belief,
}

fn normalize_row(row: &mut [f64], table: &'static str, label: String) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0 + NORMALIZATION_TOLERANCE) {
        return Err(Error::Normalization {
            table,
            row: label,
            sum: row.iter().sum(),
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization {
            table,
            row: label,
            sum,
        });
    }
    // Rows already within 1e-9 are kept bit-for-bit.
    if (sum - 1.0).abs() > 1e-9 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}
