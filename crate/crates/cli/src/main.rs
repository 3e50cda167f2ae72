use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbvi_core::bounds::DEFAULT_EXACT_CAP;
use pbvi_core::gp::KernelFamily;
use pbvi_core::{exact_value, lower_bound_value, SamplingKind, SolverConfig, UpperEngine};
use pbvi_cli::{load_model, run_cell, sig6, write_summary, write_trace, BenchmarkSpec, CliError};

#[derive(Parser)]
#[command(name = "pbvi", version, about = "Finite-horizon POMDP solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print the bounds at the initial belief.
    Solve(SolveArgs),
    /// Run a benchmark matrix described by a spec file.
    Bench {
        spec: PathBuf,
        /// Override a spec key, e.g. `--set seed=3`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Maximum number of runs in flight.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact value by full enumeration (small problems only).
    Exact {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Largest cross-sum attempted before giving up.
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        cap: usize,
    },
    /// Check that a problem file parses and print its dimensions.
    Parse { file: PathBuf },
}

#[derive(clap::Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value = "max-gap")]
    strategy: SamplingKind,
    #[arg(long, default_value = "sawtooth")]
    engine: UpperEngine,
    #[arg(long, default_value_t = 5)]
    rho: u32,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1e-5)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Seconds.
    #[arg(long, default_value_t = 3000.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "exponential")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 3)]
    grid_resolution: usize,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Disable data-parallel backups.
    #[arg(long)]
    sequential: bool,
    /// Write summary.csv and trace.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn solve_cmd(args: SolveArgs) -> Result<(), CliError> {
    if args.horizon == 0 {
        return Err(CliError::Config { line: 0, message: "horizon must be positive".into() });
    }
    let model = load_model(&args.file)?.with_horizon(args.horizon);
    let mut config = SolverConfig {
        ub_engine: args.engine,
        rho: args.rho,
        eta: args.eta,
        nu: args.nu,
        epsilon: args.epsilon,
        time_limit: args.time_limit,
        seed: args.seed,
        max_iterations: args.max_iterations,
        parallel: !args.sequential,
        ..SolverConfig::default()
    };
    config.strategy.kind = args.strategy;
    config.strategy.grid_resolution = args.grid_resolution;
    config.kernel.family = args.kernel;
    config
        .validate()
        .map_err(|e| CliError::Config { line: 0, message: e.to_string() })?;

    let name = args.file.file_stem().map_or("problem".into(), |s| s.to_string_lossy().into_owned());
    let result = run_cell(&name, &model, &config)?;
    println!(
        "lb {}  ub {}  gap {}  iterations {}  seconds {}  sawtooth {}  status {}",
        sig6(result.lb),
        sig6(result.ub),
        sig6(result.gap),
        result.trace.len(),
        sig6(result.wall_seconds),
        result.sawtooth_count,
        result.status_label()
    );
    if let Some(out) = args.out {
        std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
        write_summary(&out.join("summary.csv"), std::slice::from_ref(&result))?;
        write_trace(&out.join("trace.csv"), &result.trace)?;
    }
    Ok(())
}

fn bench_cmd(path: PathBuf, overrides: Vec<String>, jobs: Option<usize>, out: Option<PathBuf>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut spec = BenchmarkSpec::parse(&text, base)?;
    for o in &overrides {
        spec.override_with(o)?;
    }
    if let Some(jobs) = jobs {
        spec.jobs = jobs;
    }
    if let Some(out) = out {
        spec.out_dir = out;
    }
    let results = pbvi_cli::run_benchmark(&spec)?;
    println!("{} runs written to {}", results.len(), spec.out_dir.display());
    Ok(())
}

fn exact_cmd(file: PathBuf, horizon: usize, cap: usize) -> Result<(), CliError> {
    if horizon == 0 {
        return Err(CliError::Config { line: 0, message: "horizon must be positive".into() });
    }
    let model = load_model(&file)?.with_horizon(horizon);
    let stages = exact_value(&model, horizon, cap).map_err(|source| CliError::Solver {
        cell: file.display().to_string(),
        source,
    })?;
    let value = lower_bound_value(&stages[0], &model.initial_belief);
    let sizes: Vec<String> = stages.iter().map(|s| s.len().to_string()).collect();
    println!("value {}  vectors per stage {}", sig6(value), sizes.join(" "));
    Ok(())
}

fn parse_cmd(file: PathBuf) -> Result<(), CliError> {
    let model = load_model(&file)?;
    println!(
        "states {}  actions {}  observations {}",
        model.num_states(),
        model.num_actions(),
        model.num_observations()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors count as configuration errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve_cmd(args),
        Command::Bench { spec, overrides, jobs, out } => bench_cmd(spec, overrides, jobs, out),
        Command::Exact { file, horizon, cap } => exact_cmd(file, horizon, cap),
        Command::Parse { file } => parse_cmd(file),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
