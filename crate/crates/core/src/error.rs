use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsgsError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("radial functions live on different grids")]
    GridMismatch,

    #[error("scaling exponent alpha={alpha} is not admissible for p={p} (need {window})")]
    InadmissibleAlpha { alpha: f64, p: f64, window: String },

    #[error("input is numerically zero (H1 norm {norm:e} below floor {floor:e})")]
    ZeroInput { norm: f64, floor: f64 },

    #[error("no sign change of the fibration derivative within {doublings} doublings")]
    BracketNotFound { doublings: usize },

    #[error("shooting bisection failed: {0}")]
    Shooting(String),

    #[error("decay fit window contains non-positive values")]
    NonPositiveWindow,

    #[error("exponent p={p} outside the range required here ({range})")]
    ExponentOutOfRange { p: f64, range: &'static str },
}

pub type Result<T> = std::result::Result<T, CsgsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CsgsError {
    CsgsError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
