use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular configuration: |lambda - b| = {gap:.3e} below {eps:.0e}")]
    SingularConfiguration { gap: f64, eps: f64 },

    #[error("series did not converge after {terms} terms (last term {last_term:.3e})")]
    NotConverged { terms: usize, last_term: f64 },

    #[error("quadrature budget exceeded: estimated relative error {rel_err:.3e} above {target:.0e}")]
    QuadratureBudgetExceeded { rel_err: f64, target: f64 },

    #[error("no formula for branch {0}")]
    UndefinedBranch(String),

    #[error("fit diverged: {0}")]
    FitDiverged(String),
}

impl Error {
    /// Numeric failures (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::QuadratureBudgetExceeded { .. }
                | Error::SingularConfiguration { .. }
                | Error::FitDiverged(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
