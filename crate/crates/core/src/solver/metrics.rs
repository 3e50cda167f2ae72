#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    GapReached,
    TimeLimit,
    GridTooLarge,
    /// An iteration changed nothing, so further iterations cannot either.
    Stalled,
    IterationLimit,
}

impl TerminalStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminalStatus::GapReached => "gap_reached",
            TerminalStatus::TimeLimit => "time_limit",
            TerminalStatus::GridTooLarge => "grid_too_large",
            TerminalStatus::Stalled => "stalled",
            TerminalStatus::IterationLimit => "iteration_limit",
        }
    }
}

/// Bounds and bookkeeping after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub wall_seconds: f64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub sawtooth_executions: u64,
    /// GP support count per stage (zero for the sawtooth engine).
    pub support_sizes: Vec<usize>,
    pub belief_set_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
}

impl RunMetrics {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}
