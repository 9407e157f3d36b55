use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wavelength {wavelength_nm} nm is outside the validity window [{lo_nm}, {hi_nm}] nm")]
    OutOfWindow {
        wavelength_nm: f64,
        lo_nm: f64,
        hi_nm: f64,
    },

    #[error("{what} index {index} out of range (valid: {lo}..={hi})")]
    Index {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("inconsistent dispersion models: {0}")]
    ModelConsistency(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("adjacent cores {a} and {b} have equal effective index {n_eff}; threshold radius is unbounded")]
    DegeneratePair { a: usize, b: usize, n_eff: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no guided LP01 mode at {wavelength_nm} nm (n_eff bracket ({lo}, {hi}) has no root)")]
    Cutoff {
        wavelength_nm: f64,
        lo: f64,
        hi: f64,
    },

    #[error("root finder did not converge in [{lo}, {hi}] after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        lo: f64,
        hi: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("target unreachable: {0}")]
    Infeasible(String),

    #[error("no grating lobe of normalized steering {sin_theta} falls inside the visible region")]
    NoVisibleLobe { sin_theta: f64 },

    #[error("invalid input: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("could not parse design file: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cutoff { .. }
                | Error::NoConvergence { .. }
                | Error::Infeasible(_)
                | Error::NoVisibleLobe { .. }
                | Error::DegeneratePair { .. }
        )
    }
}
