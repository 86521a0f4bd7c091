use thiserror::Error;

/// Every failure the simulator can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A power rho^k would overflow; the run has to stop rather than carry an Inf.
    #[error("saturation: exponent {exponent:.3} exceeds the overflow guard (rho = {rho}, power = {power})")]
    Saturation { rho: f64, power: f64, exponent: f64 },

    #[error("vacuum: density reached {rho_min:e} in cell {cell} at t = {t} (gamma = {gamma}) after all dt halvings")]
    Vacuum { t: f64, cell: usize, rho_min: f64, gamma: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl SimError {
    /// Runtime failures abort a single run; everything else is a usage problem.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            SimError::Vacuum { .. } | SimError::Saturation { .. } | SimError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
