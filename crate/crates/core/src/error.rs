use thiserror::Error;

use crate::model::Trajectory;

pub type Result<T> = std::result::Result<T, FhdError>;

#[derive(Debug, Error)]
pub enum FhdError {
    /// A precondition on the inputs was violated (bad grid, bad config, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A function was evaluated outside its domain, e.g. `v <= 0`.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),

    /// The parameters lie outside the soliton existence domain.
    #[error("no soliton for lambda = {lambda_speed}, v0 = {v0}: {reason}")]
    NoSoliton {
        lambda_speed: f64,
        v0: f64,
        reason: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The evolution left the admissible state space. The trajectory holds
    /// every frame recorded before the failure plus the last good state.
    #[error("evolution aborted at t = {t}: {reason}")]
    EvolutionAborted {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },
}

impl FhdError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FhdError::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FhdError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        FhdError::Numerical(msg.into())
    }

    /// True for failures caused by the inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            FhdError::InvalidInput(_)
                | FhdError::Domain(_)
                | FhdError::UnsupportedBoundary(_)
                | FhdError::NoSoliton { .. }
        )
    }
}
