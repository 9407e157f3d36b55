use std::fmt;

/// Failure of a CLI run, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit status 1.
    Config(String),
    /// Solver or search failure on valid inputs; exit status 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<mcf_ttdl::Error> for CliError {
    fn from(e: mcf_ttdl::Error) -> Self {
        let msg = e.to_string();
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Config(msg)
        }
    }
}
