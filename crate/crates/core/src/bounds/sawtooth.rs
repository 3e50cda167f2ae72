use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::model::{Belief, BELIEF_EPSILON};

/// Counts sawtooth projections executed during one solver run.
#[derive(Debug, Default)]
pub struct SawtoothCounter(AtomicU64);

impl SawtoothCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Hash key for exact lookups of stored beliefs.
pub(crate) fn belief_key(b: &Belief) -> Vec<i64> {
    b.probs().iter().map(|p| (p / BELIEF_EPSILON).round() as i64).collect()
}

#[derive(Debug, Clone)]
struct InteriorPoint {
    belief: Belief,
    value: f64,
    /// `(s, 1 / b(s))` for every state with positive mass.
    inverse_support: Vec<(usize, f64)>,
    /// `value - sum_s b(s) V(w_s)`
    excess: f64,
}

/// Belief/upper-bound pairs for one stage: one value per corner belief plus
/// any number of interior points.
#[derive(Debug, Clone)]
pub struct UpperBoundSet {
    corners: Vec<f64>,
    interior: Vec<InteriorPoint>,
    index: HashMap<Vec<i64>, usize>,
}

impl UpperBoundSet {
    pub fn new(corner_values: Vec<f64>) -> Self {
        assert!(corner_values.iter().all(|v| v.is_finite()));
        UpperBoundSet {
            corners: corner_values,
            interior: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn corner_values(&self) -> &[f64] {
        &self.corners
    }

    /// Number of stored pairs including corners.
    pub fn len(&self) -> usize {
        self.corners.len() + self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All stored pairs, corners first.
    pub fn points(&self) -> Vec<(Belief, f64)> {
        let ns = self.corners.len();
        let corners = self.corners.iter().enumerate().map(|(s, &v)| (Belief::corner(ns, s), v));
        corners
            .chain(self.interior.iter().map(|p| (p.belief.clone(), p.value)))
            .collect()
    }

    pub fn interpolate_corners(&self, b: &Belief) -> f64 {
        b.dot(&self.corners)
    }

    /// Stored value at `b`, if `b` is a corner or a stored interior point.
    pub fn get(&self, b: &Belief) -> Option<f64> {
        if let Some(s) = b.corner_index() {
            return Some(self.corners[s]);
        }
        self.index.get(&belief_key(b)).map(|&i| self.interior[i].value)
    }

    pub fn contains(&self, b: &Belief) -> bool {
        self.get(b).is_some()
    }

    /// Inserts `(b, value)` or lowers the stored value to `min(old, value)`.
    /// Returns whether anything changed.
    pub fn update(&mut self, b: &Belief, value: f64) -> bool {
        assert!(value.is_finite(), "upper bound must be finite");
        if let Some(s) = b.corner_index() {
            if value < self.corners[s] {
                self.corners[s] = value;
                self.refresh_excess();
                return true;
            }
            return false;
        }
        let key = belief_key(b);
        if let Some(&i) = self.index.get(&key) {
            let point = &mut self.interior[i];
            if value < point.value {
                point.value = value;
                point.excess = value - point.belief.dot(&self.corners);
                return true;
            }
            return false;
        }
        let inverse_support = b
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (s, 1.0 / p))
            .collect();
        self.index.insert(key, self.interior.len());
        self.interior.push(InteriorPoint {
            belief: b.clone(),
            value,
            inverse_support,
            excess: value - b.dot(&self.corners),
        });
        true
    }

    fn refresh_excess(&mut self) {
        for p in &mut self.interior {
            p.excess = p.value - p.belief.dot(&self.corners);
        }
    }

    /// Sawtooth interpolation at `query` without touching any counter.
    ///
    /// Each interior point contributes a downward pyramid of depth
    /// `excess = v - corner interpolation`, scaled by
    /// `lambda = min_{s: b(s) > 0} query(s) / b(s)`. The corner interpolation
    /// itself is always a candidate, so points whose excess is positive never
    /// raise the bound.
    pub fn project(&self, query: &Belief) -> f64 {
        let q = query.probs();
        let mut best = 0.0f64;
        for p in &self.interior {
            if p.excess >= 0.0 {
                continue;
            }
            let mut lambda = f64::INFINITY;
            for &(s, inv) in &p.inverse_support {
                let r = q[s] * inv;
                if r < lambda {
                    lambda = r;
                    if lambda == 0.0 {
                        break;
                    }
                }
            }
            let candidate = lambda * p.excess;
            if candidate < best {
                best = candidate;
            }
        }
        self.interpolate_corners(query) + best
    }
}

/// Sawtooth projection of `query` onto `ubs`, counted in `counter`.
pub fn sawtooth_project(ubs: &UpperBoundSet, query: &Belief, counter: &SawtoothCounter) -> f64 {
    counter.increment();
    ubs.project(query)
}
