use super::{prune_dominated, AlphaVector};
use crate::error::{Error, Result};
use crate::model::PomdpModel;

/// Default limit on the number of vectors a single cross-sum may produce.
pub const DEFAULT_EXACT_CAP: usize = 1_000_000;

/// Exact finite-horizon value function by full enumeration of the backup
/// cross-sums, with pointwise pruning after every partial sum.
///
/// Returns one vector set per stage, index 0 first. Intended as an oracle on
/// small models only.
pub fn exact_value(model: &PomdpModel, horizon: usize, cap: usize) -> Result<Vec<Vec<AlphaVector>>> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let (na, no) = (model.num_actions(), model.num_observations());
    let mut stages: Vec<Vec<AlphaVector>> = vec![Vec::new(); horizon];
    stages[horizon - 1] = prune_dominated(
        (0..na)
            .map(|a| AlphaVector::new(model.reward_vector(a).to_vec(), a))
            .collect(),
    );
    for t in (0..horizon - 1).rev() {
        let next = &stages[t + 1];
        let mut all = Vec::new();
        for a in 0..na {
            let mut partial = vec![model.reward_vector(a).to_vec()];
            for o in 0..no {
                let projected: Vec<Vec<f64>> = prune_dominated(
                    next.iter()
                        .map(|alpha| AlphaVector::new(model.project_vector(&alpha.values, a, o), a))
                        .collect(),
                )
                .into_iter()
                .map(|v| v.values)
                .collect();
                let requested = partial.len() as f64 * projected.len() as f64;
                if requested > cap as f64 {
                    return Err(Error::BlowupExceeded { requested, cap });
                }
                let mut sums = Vec::with_capacity(requested as usize);
                for base in &partial {
                    for add in &projected {
                        let v = base.iter().zip(add).map(|(x, y)| x + y).collect();
                        sums.push(AlphaVector::new(v, a));
                    }
                }
                partial = prune_dominated(sums).into_iter().map(|v| v.values).collect();
            }
            all.extend(partial.into_iter().map(|v| AlphaVector::new(v, a)));
        }
        stages[t] = prune_dominated(all);
    }
    Ok(stages)
}
