use crate::model::{Belief, PomdpModel};

/// One-step upper-bound value of every action at `b`:
/// `b . R(., a) + sum_o P(o|b,a) projector(b'_{a,o})`, or just the expected
/// reward at the last stage.
pub fn upper_action_values<P>(model: &PomdpModel, b: &Belief, stage: usize, projector: P) -> Vec<f64>
where
    P: Fn(&Belief) -> f64,
{
    let terminal = stage + 1 >= model.horizon;
    (0..model.num_actions())
        .map(|a| {
            let immediate = b.dot(model.reward_vector(a));
            if terminal {
                return immediate;
            }
            immediate
                + model
                    .successors(b, a)
                    .iter()
                    .map(|succ| succ.prob * projector(&succ.belief))
                    .sum::<f64>()
        })
        .collect()
}

/// Bellman backup of an upper bound at `b` given a next-stage projector.
pub fn upper_bound_backup<P>(model: &PomdpModel, b: &Belief, stage: usize, projector: P) -> f64
where
    P: Fn(&Belief) -> f64,
{
    upper_action_values(model, b, stage, projector)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fully observable backward induction, `V_t(s) = max_a [R(s,a) + sum_s' T(s'|s,a) V_{t+1}(s')]`,
/// giving admissible upper bounds at the corner beliefs of every stage.
pub fn mdp_corner_bounds(model: &PomdpModel) -> Vec<Vec<f64>> {
    let ns = model.num_states();
    let mut stages = vec![Vec::new(); model.horizon];
    let mut next: Option<Vec<f64>> = None;
    for t in (0..model.horizon).rev() {
        let values: Vec<f64> = (0..ns)
            .map(|s| {
                (0..model.num_actions())
                    .map(|a| {
                        let future = next.as_ref().map_or(0.0, |v| {
                            (0..ns).map(|s2| model.transition(s, a, s2) * v[s2]).sum()
                        });
                        model.reward(s, a) + future
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        stages[t] = values.clone();
        next = Some(values);
    }
    stages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::tiger;

    #[test]
    fn terminal_upper_backup_on_tiger() {
        let m = tiger().with_horizon(1);
        let v = upper_bound_backup(&m, &Belief::uniform(2), 0, |_| unreachable!());
        assert_eq!(v, -1.0);
    }

    #[test]
    fn constant_projector_is_additive() {
        let m = crate::testing::deterministic_chain(1).with_horizon(2);
        let b = Belief::uniform(1);
        let v = upper_bound_backup(&m, &b, 0, |_| 3.5);
        assert_eq!(v, 1.0 + 3.5);
    }

    #[test]
    fn exact_next_stage_gives_exact_two_stage_value() {
        let m = tiger().with_horizon(2);
        let exact_last = |b: &Belief| {
            (0..3).map(|a| b.dot(m.reward_vector(a))).fold(f64::NEG_INFINITY, f64::max)
        };
        let v = upper_bound_backup(&m, &Belief::uniform(2), 0, exact_last);
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn mdp_bounds_on_tiger() {
        let m = tiger().with_horizon(2);
        let bounds = mdp_corner_bounds(&m);
        // last stage: open the right door
        assert_eq!(bounds[1], vec![10.0, 10.0]);
        // first stage: opening resets to a uniform state worth 10 either way
        assert_eq!(bounds[0], vec![20.0, 20.0]);
    }
}
