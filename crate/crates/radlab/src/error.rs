use thiserror::Error;

/// Failures raised by the numerical lab.
///
/// Domain-type variants carry the violated condition as text so callers
/// (the CLI in particular) can report it verbatim.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: requires {0}")]
    Domain(String),

    #[error("existence violation: {condition} (threshold {threshold})")]
    Existence { condition: String, threshold: f64 },

    #[error("quadrature failed to reach tolerance: {0}")]
    Quadrature(String),

    #[error("invalid bracket: {0}")]
    Bracket(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("window too small: {0}")]
    Window(String),

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("monotonicity violation at iterate {k}: {detail}")]
    Monotonicity { k: usize, detail: String },

    #[error("no convergence after {steps} steps (last gap {last_gap})")]
    NoConvergence { steps: usize, last_gap: f64 },

    #[error("invalid problem: {0}")]
    Problem(String),
}

impl Error {
    /// True for errors caused by inputs outside a validity regime, as opposed
    /// to numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Existence { .. } | Error::Window(_) | Error::Hypothesis(_) | Error::Problem(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
