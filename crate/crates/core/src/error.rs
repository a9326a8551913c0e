use thiserror::Error;

use crate::fock::FockIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised while building states or evaluating estimation quantities.
///
/// Variants split into two families: input validation (bad parameters,
/// unnormalised states, unsupported kinds) and numerical failures (an ill-posed
/// Lyapunov solve, a divergent Fisher information). [`Error::is_numerical`]
/// tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state norm deviates from one by {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Fock index {index} exceeds truncation n_max = {n_max}")]
    IndexOutOfRange { index: FockIndex, n_max: u32 },

    #[error("inner state overlaps the vacuum (|<0|phi>|^2 = {overlap:e})")]
    VacuumOverlap { overlap: f64 },

    #[error("degenerate probe: the state is the two-mode vacuum")]
    DegenerateProbe,

    #[error("conditioning undefined: detection probability is zero")]
    UndefinedConditioning,

    #[error("unsupported state for {operation}: {kind}")]
    Unsupported { operation: &'static str, kind: String },

    #[error("symmetric logarithmic derivative ill-defined: derivative leaks outside the support by {leak:e}")]
    IllDefinedSld { leak: f64 },

    #[error("optimal estimator ill-defined: first moment leaks outside the support by {leak:e}")]
    IllDefinedEstimator { leak: f64 },

    #[error("classical Fisher information diverges at outcome {outcome}")]
    DivergentCfi { outcome: FockIndex },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllDefinedSld { .. } | Error::IllDefinedEstimator { .. } | Error::DivergentCfi { .. }
        )
    }
}
