use jsdm::error::JsdmError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Every violated constraint, one entry each.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    #[error(transparent)]
    Solver(JsdmError),
    #[error("io: {0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(vec![msg.into()])
    }

    /// 2 for configuration problems, 3 for non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Solver(e) if e.is_non_convergence() => 3,
            HarnessError::Solver(JsdmError::InvalidInput(_) | JsdmError::Infeasible(_)) => 2,
            _ => 1,
        }
    }
}

impl From<JsdmError> for HarnessError {
    fn from(e: JsdmError) -> Self {
        HarnessError::Solver(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
