use thiserror::Error;

/// Errors raised by model loading, bound computation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown {kind} identifier `{name}`")]
    UnknownIdentifier {
        line: usize,
        kind: &'static str,
        name: String,
    },

    #[error("{table} row {row} sums to {sum} (expected 1 within 1e-6)")]
    Normalization {
        table: &'static str,
        row: String,
        sum: f64,
    },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("observation {observation} has zero probability after action {action}")]
    ZeroProbabilityObservation { action: usize, observation: usize },

    #[error("exact enumeration would produce {requested} vectors (cap {cap})")]
    BlowupExceeded { requested: f64, cap: usize },

    #[error("belief grid with {requested} points exceeds the cap of {cap}")]
    GridTooLarge { requested: f64, cap: usize },

    #[error("support belief duplicates an existing support (index {0})")]
    DuplicateSupport(usize),

    #[error("kernel matrix factorization failed (last jitter {jitter:e})")]
    FactorizationFailure { jitter: f64 },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
