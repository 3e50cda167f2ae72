//! Benchmark spec files: one `key = value` pair per line, `#` starts a
//! comment, list-valued keys are given by repeating the key.

use std::path::{Path, PathBuf};

use pbvi_core::gp::KernelFamily;
use pbvi_core::{SamplingKind, SolverConfig, UpperEngine};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub problems: Vec<PathBuf>,
    pub horizons: Vec<usize>,
    pub strategies: Vec<SamplingKind>,
    pub engines: Vec<UpperEngine>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Benchmark cells run concurrently, at most this many at a time.
    pub jobs: usize,
    /// Shared solver settings; strategy, engine, seed and horizon are set per cell.
    pub solver: SolverConfig,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            problems: Vec::new(),
            horizons: Vec::new(),
            strategies: Vec::new(),
            engines: Vec::new(),
            seeds: Vec::new(),
            out_dir: PathBuf::from("results"),
            jobs: 1,
            solver: SolverConfig {
                parallel: false,
                ..SolverConfig::default()
            },
        }
    }
}

fn config_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        message: message.into(),
    }
}

fn value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| config_error(line, format!("bad value `{raw}` for `{key}`: {e}")))
}

impl BenchmarkSpec {
    /// Parses spec text; relative problem paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut spec = BenchmarkSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| config_error(i + 1, format!("expected `key = value`, found `{line}`")))?;
            spec.set(i + 1, key.trim(), val.trim(), base_dir)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one `key=value` setting. List keys append.
    pub fn set(&mut self, line: usize, key: &str, val: &str, base_dir: &Path) -> Result<(), CliError> {
        let s = &mut self.solver;
        match key {
            "problem" => self.problems.push(base_dir.join(val)),
            "horizon" => self.horizons.push(value(line, key, val)?),
            "strategy" => self.strategies.push(value(line, key, val)?),
            "engine" => self.engines.push(value(line, key, val)?),
            "seed" => self.seeds.push(value(line, key, val)?),
            "out" => self.out_dir = base_dir.join(val),
            "jobs" => self.jobs = value(line, key, val)?,
            "time_limit" => s.time_limit = value(line, key, val)?,
            "rho" => s.rho = value(line, key, val)?,
            "eta" => s.eta = value(line, key, val)?,
            "nu" => s.nu = value(line, key, val)?,
            "epsilon" => s.epsilon = value(line, key, val)?,
            "initial_phase_iters" => s.initial_phase_iters = value(line, key, val)?,
            "periodic_check_interval" => s.periodic_check_interval = value(line, key, val)?,
            "grid_resolution" => s.strategy.grid_resolution = value(line, key, val)?,
            "grid_cap" => s.grid_cap = value(line, key, val)?,
            "kernel" => s.kernel.family = value::<KernelFamily>(line, key, val)?,
            "length_scale" => s.kernel.length_scale = value(line, key, val)?,
            "noise_variance" => s.noise_variance = Some(value(line, key, val)?),
            "random_initial_supports" => s.random_initial_supports = value(line, key, val)?,
            "max_iterations" => s.max_iterations = Some(value(line, key, val)?),
            "parallel" => s.parallel = value(line, key, val)?,
            other => return Err(config_error(line, format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a command-line override of the form `key=value`.
    pub fn override_with(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, val) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(0, format!("override `{assignment}` is not `key=value`")))?;
        let key = key.trim();
        // a command-line list replaces the file's list instead of extending it
        match key {
            "problem" => self.problems.clear(),
            "horizon" => self.horizons.clear(),
            "strategy" => self.strategies.clear(),
            "engine" => self.engines.clear(),
            "seed" => self.seeds.clear(),
            _ => {}
        }
        self.set(0, key, val.trim(), Path::new(""))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let require = |empty: bool, key: &str| {
            if empty {
                Err(config_error(0, format!("at least one `{key}` is required")))
            } else {
                Ok(())
            }
        };
        require(self.problems.is_empty(), "problem")?;
        require(self.horizons.is_empty(), "horizon")?;
        require(self.strategies.is_empty(), "strategy")?;
        require(self.engines.is_empty(), "engine")?;
        require(self.seeds.is_empty(), "seed")?;
        if self.horizons.contains(&0) {
            return Err(config_error(0, "horizons must be positive"));
        }
        if self.jobs == 0 {
            return Err(config_error(0, "jobs must be positive"));
        }
        self.solver
            .validate()
            .map_err(|e| config_error(0, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = "\
# two problems, both engines
problem = a.pomdp
problem = b.pomdp
horizon = 10
horizon = 20
strategy = max-gap
engine = sawtooth
engine = gp-ucb
seed = 1
seed = 2   # trailing comment
time_limit = 60
kernel = matern-5/2
out = results
";

    #[test]
    fn parses_lists_and_scalars() {
        let spec = BenchmarkSpec::parse(SPEC, Path::new("/data")).unwrap();
        assert_eq!(spec.problems, vec![PathBuf::from("/data/a.pomdp"), PathBuf::from("/data/b.pomdp")]);
        assert_eq!(spec.horizons, vec![10, 20]);
        assert_eq!(spec.engines, vec![UpperEngine::Sawtooth, UpperEngine::GpUcb]);
        assert_eq!(spec.seeds, vec![1, 2]);
        assert_eq!(spec.solver.time_limit, 60.0);
        assert_eq!(spec.solver.kernel.family, KernelFamily::Matern52);
        assert_eq!(spec.out_dir, PathBuf::from("/data/results"));
        assert!(!spec.solver.parallel);
    }

    #[test]
    fn overrides_replace_lists() {
        let mut spec = BenchmarkSpec::parse(SPEC, Path::new("/data")).unwrap();
        spec.override_with("seed=7").unwrap();
        spec.override_with("rho = 3").unwrap();
        assert_eq!(spec.seeds, vec![7]);
        assert_eq!(spec.solver.rho, 3);
    }

    #[test]
    fn reports_bad_lines() {
        let err = BenchmarkSpec::parse("problem = a\nhorizon = ten\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, CliError::Config { line: 2, .. }), "{err}");
        let err = BenchmarkSpec::parse("colour = blue\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = BenchmarkSpec::parse("problem = a\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("horizon"));
    }
}
