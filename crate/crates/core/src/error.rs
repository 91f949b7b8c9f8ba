use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    /// NaN/Inf or runaway growth in a time integrator. Never a statement
    /// about blow-up of the continuous equations.
    #[error("discretization failure at t = {t}: {reason}")]
    DiscretizationFailure { t: f64, reason: String },

    #[error("map is not a contraction perturbation of the identity (Lipschitz bound {lipschitz:.3e} >= 1)")]
    NotContractive { lipschitz: f64 },

    #[error("map inversion did not converge after {iterations} iterations (last update {update:.3e})")]
    InversionFailed { iterations: usize, update: f64 },

    #[error("resolution guard: {0}")]
    ResolutionGuard(String),

    #[error("probe failure: {0}")]
    ProbeFailed(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
