use miw_core::ou_chain::OuError;
use miw_core::{DocumentError, MetricsError, SolverError, ZeroBiasError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failed: {0}")]
    Solver(SolverError),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invariant check failed: {}", failed.join(", "))]
    Invariant { failed: Vec<String> },
    #[error("{0}")]
    MissingDependency(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(SolverError::InvalidInput(_)) => 2,
            CliError::Solver(_) | CliError::Io(_) | CliError::Computation(_) => 1,
            CliError::Schema(_) => 3,
            CliError::Invariant { .. } => 4,
            CliError::MissingDependency(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Solver(SolverError::InvalidInput(_)) => "usage",
            CliError::Solver(_) => "solver",
            CliError::Schema(_) => "schema",
            CliError::Invariant { .. } => "invariant",
            CliError::MissingDependency(_) => "missing_dependency",
            CliError::Io(_) => "io",
            CliError::Computation(_) => "computation",
        }
    }

    /// Single-line JSON for standard error.
    pub fn to_json(&self) -> String {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Invariant { failed } = self {
            body["failed"] = json!(failed);
        }
        json!({ "error": body }).to_string()
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::Solver(e)
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<ZeroBiasError> for CliError {
    fn from(e: ZeroBiasError) -> Self {
        CliError::Computation(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Computation(e.to_string())
    }
}

impl From<OuError> for CliError {
    fn from(e: OuError) -> Self {
        match e {
            OuError::InvalidInput(msg) => CliError::Usage(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
