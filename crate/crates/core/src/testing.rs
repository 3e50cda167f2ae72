//! Small fixture models shared by unit tests, integration tests and benches.

use crate::model::{parse_pomdp, Belief, PomdpModel};

/// The classic two-door tiger problem.
pub const TIGER_POMDP: &str = include_str!("../../../data/tiger.pomdp");

/// Tiger with horizon 1; use [`PomdpModel::with_horizon`] for longer runs.
pub fn tiger() -> PomdpModel {
    parse_pomdp(TIGER_POMDP).expect("bundled tiger model parses")
}

/// One action, identity dynamics and an observation that reveals the state.
/// Reward in state `s` is `s + 1`.
pub fn deterministic_chain(num_states: usize) -> PomdpModel {
    let ns = num_states;
    let mut transition = vec![0.0; ns * ns];
    let mut observation = vec![0.0; ns * ns];
    for s in 0..ns {
        transition[s * ns + s] = 1.0;
        observation[s * ns + s] = 1.0;
    }
    let names = |p: &str| (0..ns).map(|i| format!("{p}{i}")).collect();
    PomdpModel::new(
        names("s"),
        vec!["stay".into()],
        names("o"),
        transition,
        observation,
        (0..ns).map(|s| s as f64 + 1.0).collect(),
        1,
        Belief::uniform(ns),
    )
    .expect("fixture is valid")
}

/// Lowest value at `query` over all convex combinations of the stored
/// points, `min sum c_i v_i` subject to `sum c_i b_i = query`, `c >= 0`.
///
/// Solved by enumerating every basis of `|S|` points, so only usable on
/// small sets. Returns `None` when `query` is outside their hull.
pub fn hull_interpolation(points: &[(Belief, f64)], query: &Belief) -> Option<f64> {
    let n = query.len();
    let mut best: Option<f64> = None;
    let mut basis: Vec<usize> = (0..n).collect();
    if points.len() < n {
        return None;
    }
    loop {
        let columns: Vec<&[f64]> = basis.iter().map(|&i| points[i].0.probs()).collect();
        if let Some(c) = solve_columns(&columns, query.probs()) {
            if c.iter().all(|&x| x >= -1e-12) {
                let v: f64 = basis.iter().zip(&c).map(|(&i, &ci)| ci * points[i].1).sum();
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        if !next_combination(&mut basis, points.len()) {
            return best;
        }
    }
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < total - k + pos {
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting on the square system whose
/// columns are `columns`.
fn solve_columns(columns: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row: Vec<f64> = columns.iter().map(|c| c[r]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    Some((0..n).map(|r| a[r][n] / a[r][r]).collect())
}
