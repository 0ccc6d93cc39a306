use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid-argument: {0}")]
    InvalidArgument(String),

    #[error("out-of-horizon: query {requested} exceeds path horizon {horizon}")]
    OutOfHorizon { requested: f64, horizon: f64 },

    #[error("singular-point: {0}")]
    SingularPoint(String),

    #[error("unsupported-parameter: {0}")]
    UnsupportedParameter(String),

    #[error("budget-exceeded: {used} quadrature nodes used (limit {limit}) while integrating over [{lo}, {hi}]")]
    BudgetExceeded {
        used: usize,
        limit: usize,
        lo: f64,
        hi: f64,
    },

    #[error("not-converged: {what}: {value} ± {error} after {nodes} nodes")]
    NotConverged {
        what: String,
        value: f64,
        error: f64,
        nodes: usize,
    },

    #[error("horizon-guard: expected {expected_events:.3e} Poisson events exceeds the limit {limit:.3e}; increase epsilon or the tail tolerance")]
    HorizonGuard { expected_events: f64, limit: f64 },

    #[error("invalid-combination: {0}")]
    InvalidCombination(String),

    #[error("degenerate-sample: {0}")]
    DegenerateSample(String),

    #[error("unknown {kind} '{name}' (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("replica {index}: {source}")]
    Replica { index: u64, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures that come from runtime guards (event budget,
    /// horizon, node budget) rather than from a malformed request.
    pub fn is_runtime_guard(&self) -> bool {
        match self {
            Error::HorizonGuard { .. } | Error::BudgetExceeded { .. } | Error::OutOfHorizon { .. } => {
                true
            }
            Error::Replica { source, .. } => source.is_runtime_guard(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
