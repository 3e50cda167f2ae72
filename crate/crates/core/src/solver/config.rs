use crate::error::{Error, Result};
use crate::gp::Kernel;
use crate::sampling::{SamplingStrategy, DEFAULT_GRID_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperEngine {
    Sawtooth,
    GpUcb,
}

impl UpperEngine {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpperEngine::Sawtooth => "sawtooth",
            UpperEngine::GpUcb => "gp-ucb",
        }
    }
}

impl std::str::FromStr for UpperEngine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sawtooth" => Ok(UpperEngine::Sawtooth),
            "gp-ucb" => Ok(UpperEngine::GpUcb),
            other => Err(format!("unknown upper-bound engine `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub strategy: SamplingStrategy,
    pub ub_engine: UpperEngine,
    /// Target-gap exponent: the run stops once the gap is within
    /// `10^-rho` of the upper bound's order of magnitude.
    pub rho: u32,
    /// UCB multiplier on the posterior standard deviation.
    pub eta: f64,
    /// ALD threshold for admitting a new support belief.
    pub nu: f64,
    /// Absolute gap threshold; the effective threshold is `max(epsilon, target_gap)`.
    pub epsilon: f64,
    /// Seconds, checked between iterations.
    pub time_limit: f64,
    /// Iterations that always perform a full sawtooth refresh of the GP targets.
    pub initial_phase_iters: usize,
    pub periodic_check_interval: usize,
    pub seed: u64,
    /// Kernel family and length scale; the signal variance is re-estimated on each refit.
    pub kernel: Kernel,
    /// Observation noise of the GP; `None` means `1e-4` times the signal variance.
    pub noise_variance: Option<f64>,
    /// Cap on grid size and on successor evaluations per fixed-grid sweep.
    pub grid_cap: usize,
    /// Start each stage's GP from `|S| + 1` uniformly drawn beliefs instead of
    /// the initial belief set.
    pub random_initial_supports: bool,
    pub max_iterations: Option<usize>,
    /// Run per-stage backups on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            strategy: SamplingStrategy::default(),
            ub_engine: UpperEngine::Sawtooth,
            rho: 5,
            eta: 1.0,
            nu: 1e-5,
            epsilon: 0.0,
            time_limit: 3000.0,
            initial_phase_iters: 5,
            periodic_check_interval: 5,
            seed: 0,
            kernel: Kernel::default(),
            noise_variance: None,
            grid_cap: DEFAULT_GRID_CAP,
            random_initial_supports: false,
            max_iterations: None,
            parallel: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.time_limit > 0.0) {
            return fail("time_limit must be positive");
        }
        if self.rho < 1 {
            return fail("rho must be at least 1");
        }
        if !(self.eta >= 0.0) {
            return fail("eta must be nonnegative");
        }
        if !(self.nu > 0.0) {
            return fail("nu must be positive");
        }
        if !(self.epsilon >= 0.0) {
            return fail("epsilon must be nonnegative");
        }
        if self.strategy.grid_resolution < 1 {
            return fail("grid_resolution must be at least 1");
        }
        if self.periodic_check_interval < 1 {
            return fail("periodic_check_interval must be at least 1");
        }
        if self.noise_variance.is_some_and(|v| !(v >= 0.0)) {
            return fail("noise_variance must be nonnegative");
        }
        if !(self.kernel.length_scale > 0.0) {
            return fail("kernel length scale must be positive");
        }
        Ok(())
    }
}
