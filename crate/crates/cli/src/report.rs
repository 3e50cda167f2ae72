//! CSV output: per-run traces, the run summary and per-cell aggregates.

use std::fs;
use std::path::Path;

use pbvi_core::IterationRecord;

use crate::{CellResult, CliError};

/// Formats a value with six significant digits; `NA` for non-finite values.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// First elapsed time at which the recorded gap is within `target`.
pub fn time_to_gap(trace: &[IterationRecord], target: f64) -> Option<f64> {
    trace.iter().find(|r| r.gap <= target).map(|r| r.wall_seconds)
}

/// Writes `bytes` next to `path` and renames into place.
fn write_atomic(path: &Path, bytes: Vec<u8>) -> Result<(), CliError> {
    let tmp = path.with_extension("csv.tmp");
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

fn join_sizes(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<(), CliError> {
    let header = [
        "iteration",
        "wall_seconds",
        "lb",
        "ub",
        "gap",
        "sawtooth_executions",
        "support_sizes",
        "belief_set_sizes",
    ];
    let bytes = csv_bytes(&header, |w| {
        for r in trace {
            w.write_record([
                r.iteration.to_string(),
                sig6(r.wall_seconds),
                sig6(r.lb),
                sig6(r.ub),
                sig6(r.gap),
                r.sawtooth_executions.to_string(),
                join_sizes(&r.support_sizes),
                join_sizes(&r.belief_set_sizes),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, bytes)
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "problem",
    "horizon",
    "strategy",
    "engine",
    "seed",
    "lb",
    "ub",
    "gap",
    "wall_seconds",
    "sawtooth_count",
    "status",
];

pub fn summary_row(c: &CellResult) -> [String; 11] {
    [
        c.problem.clone(),
        c.horizon.to_string(),
        c.strategy.as_str().to_string(),
        c.engine.as_str().to_string(),
        c.seed.to_string(),
        sig6(c.lb),
        sig6(c.ub),
        sig6(c.gap),
        sig6(c.wall_seconds),
        c.sawtooth_count.to_string(),
        c.status_label().to_string(),
    ]
}

pub fn write_summary(path: &Path, cells: &[CellResult]) -> Result<(), CliError> {
    let bytes = csv_bytes(&SUMMARY_HEADER, |w| {
        for c in cells {
            w.write_record(summary_row(c))?;
        }
        Ok(())
    })?;
    write_atomic(path, bytes)
}

/// Seed statistics for one (problem, horizon, strategy, engine) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub problem: String,
    pub horizon: usize,
    pub strategy: String,
    pub engine: String,
    pub runs: usize,
    /// Runs that produced bounds (not NA).
    pub completed: usize,
    pub mean_lb: f64,
    pub std_lb: f64,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub worst_gap: f64,
    pub mean_wall_seconds: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Groups runs by everything except the seed, in first-appearance order.
pub fn aggregate(cells: &[CellResult]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize, String, String)> = Vec::new();
    for c in cells {
        let key = (c.problem.clone(), c.horizon, c.strategy.as_str().into(), c.engine.as_str().into());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(problem, horizon, strategy, engine)| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| {
                    c.problem == problem
                        && c.horizon == horizon
                        && c.strategy.as_str() == strategy
                        && c.engine.as_str() == engine
                })
                .collect();
            let done: Vec<&CellResult> = group.iter().copied().filter(|c| c.gap.is_finite()).collect();
            let lbs: Vec<f64> = done.iter().map(|c| c.lb).collect();
            let gaps: Vec<f64> = done.iter().map(|c| c.gap).collect();
            let walls: Vec<f64> = done.iter().map(|c| c.wall_seconds).collect();
            let (mean_lb, std_lb) = mean_std(&lbs);
            let (mean_gap, std_gap) = mean_std(&gaps);
            AggregateRow {
                problem,
                horizon,
                strategy,
                engine,
                runs: group.len(),
                completed: done.len(),
                mean_lb,
                std_lb,
                mean_gap,
                std_gap,
                worst_gap: gaps.iter().copied().reduce(f64::max).unwrap_or(f64::NAN),
                mean_wall_seconds: mean_std(&walls).0,
            }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<(), CliError> {
    let header = [
        "problem",
        "horizon",
        "strategy",
        "engine",
        "runs",
        "completed",
        "mean_lb",
        "std_lb",
        "mean_gap",
        "std_gap",
        "worst_gap",
        "mean_wall_seconds",
    ];
    let bytes = csv_bytes(&header, |w| {
        for r in rows {
            w.write_record([
                r.problem.clone(),
                r.horizon.to_string(),
                r.strategy.clone(),
                r.engine.clone(),
                r.runs.to_string(),
                r.completed.to_string(),
                sig6(r.mean_lb),
                sig6(r.std_lb),
                sig6(r.mean_gap),
                sig6(r.std_gap),
                sig6(r.worst_gap),
                sig6(r.mean_wall_seconds),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iteration: usize, wall_seconds: f64, gap: f64) -> IterationRecord {
        IterationRecord {
            iteration,
            wall_seconds,
            lb: 0.0,
            ub: gap,
            gap,
            sawtooth_executions: 0,
            support_sizes: vec![],
            belief_set_sizes: vec![],
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(65.24612345), "65.2461");
        assert_eq!(sig6(-2.0), "-2");
        assert_eq!(sig6(0.0051234567), "0.00512346");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "NA");
    }

    #[test]
    fn time_to_gap_examples() {
        let trace: Vec<_> = (1..=10).map(|i| record(i, i as f64 * 1.5, 1.0 / i as f64)).collect();
        assert_eq!(time_to_gap(&trace, 0.34), Some(4.5));
        assert_eq!(time_to_gap(&trace, 0.01), None);
        assert_eq!(time_to_gap(&trace, 5.0), Some(1.5));
    }

    #[test]
    fn sample_standard_deviation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }
}
