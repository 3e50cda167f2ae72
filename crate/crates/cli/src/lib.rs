//! Benchmark harness around `pbvi-core`: loads problem files, runs the
//! (problem, horizon, strategy, engine, seed) matrix and writes CSV results.

mod report;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use pbvi_core::{parse_pomdp, solve, IterationRecord, PomdpModel, SamplingKind, SolverConfig, TerminalStatus, UpperEngine};
use thiserror::Error;

pub use report::{aggregate, sig6, time_to_gap, write_aggregate, write_summary, write_trace, AggregateRow};
pub use spec::BenchmarkSpec;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: pbvi_core::Error,
    },

    #[error("solver failed on {cell}: {source}")]
    Solver {
        cell: String,
        #[source]
        source: pbvi_core::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 1 for input and configuration problems, 2 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver { .. } => 2,
            _ => 1,
        }
    }
}

pub fn load_model(path: &Path) -> Result<PomdpModel, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pomdp(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// Outcome of one solver run.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub problem: String,
    pub horizon: usize,
    pub strategy: SamplingKind,
    pub engine: UpperEngine,
    pub seed: u64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub wall_seconds: f64,
    pub sawtooth_count: u64,
    pub status: TerminalStatus,
    pub trace: Vec<IterationRecord>,
}

impl CellResult {
    /// Status column value; infeasible grids show as `NA`.
    pub fn status_label(&self) -> &'static str {
        match self.status {
            TerminalStatus::GridTooLarge => "NA",
            other => other.as_str(),
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}_h{}_{}_{}_s{}",
            self.problem,
            self.horizon,
            self.strategy.as_str(),
            self.engine.as_str(),
            self.seed
        )
    }
}

fn problem_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs a single configuration of the solver on `model`.
pub fn run_cell(problem: &str, model: &PomdpModel, config: &SolverConfig) -> Result<CellResult, CliError> {
    let label = format!(
        "{problem} h={} {} {} seed {}",
        model.horizon,
        config.strategy.kind.as_str(),
        config.ub_engine.as_str(),
        config.seed
    );
    log::info!("running {label}");
    let sol = solve(model, config).map_err(|source| CliError::Solver { cell: label, source })?;
    let last = sol.metrics.last();
    Ok(CellResult {
        problem: problem.to_string(),
        horizon: model.horizon,
        strategy: config.strategy.kind,
        engine: config.ub_engine,
        seed: config.seed,
        lb: sol.lb,
        ub: sol.ub,
        gap: sol.gap,
        wall_seconds: last.map_or(0.0, |r| r.wall_seconds),
        sawtooth_count: last.map_or(0, |r| r.sawtooth_executions),
        status: sol.metrics.status,
        trace: sol.metrics.records,
    })
}

struct Cell<'a> {
    problem: &'a str,
    model: PomdpModel,
    config: SolverConfig,
}

/// Runs one cell and writes its trace as soon as it finishes.
fn run_and_trace(cell: &Cell<'_>, trace_dir: &Path) -> Result<CellResult, CliError> {
    let result = run_cell(cell.problem, &cell.model, &cell.config)?;
    write_trace(&trace_dir.join(format!("{}.csv", result.label())), &result.trace)?;
    Ok(result)
}

#[cfg(feature = "parallel")]
fn run_cells(cells: &[Cell<'_>], jobs: usize, trace_dir: &Path) -> Vec<Result<CellResult, CliError>> {
    use rayon::prelude::*;
    let go = |c: &Cell<'_>| run_and_trace(c, trace_dir);
    if jobs <= 1 {
        return cells.iter().map(go).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(go).collect()),
        Err(e) => {
            log::warn!("could not start {jobs} worker threads ({e}); running sequentially");
            cells.iter().map(go).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cells: &[Cell<'_>], _jobs: usize, trace_dir: &Path) -> Vec<Result<CellResult, CliError>> {
    cells.iter().map(|c| run_and_trace(c, trace_dir)).collect()
}

/// Runs every cell of `spec` and writes `summary.csv`, `aggregate.csv` and one
/// trace file per run under `traces/` in the output directory.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<CellResult>, CliError> {
    spec.validate()?;
    let models: Vec<(String, PomdpModel)> = spec
        .problems
        .iter()
        .map(|p| Ok((problem_name(p), load_model(p)?)))
        .collect::<Result<_, CliError>>()?;
    let trace_dir = spec.out_dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|source| CliError::Io {
        path: trace_dir.clone(),
        source,
    })?;

    let mut cells = Vec::new();
    for (name, model) in &models {
        for &horizon in &spec.horizons {
            for &strategy in &spec.strategies {
                for &engine in &spec.engines {
                    for &seed in &spec.seeds {
                        let mut config = spec.solver.clone();
                        config.strategy.kind = strategy;
                        config.ub_engine = engine;
                        config.seed = seed;
                        cells.push(Cell {
                            problem: name,
                            model: model.clone().with_horizon(horizon),
                            config,
                        });
                    }
                }
            }
        }
    }

    let results = run_cells(&cells, spec.jobs, &trace_dir)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    write_summary(&spec.out_dir.join("summary.csv"), &results)?;
    write_aggregate(&spec.out_dir.join("aggregate.csv"), &aggregate(&results))?;
    Ok(results)
}
