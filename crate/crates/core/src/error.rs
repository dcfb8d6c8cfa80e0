use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("marker count {0} must be even and at least 16")]
    MarkerCount(usize),

    #[error("field length {got} does not match curve with {expected} markers")]
    LengthMismatch { expected: usize, got: usize },

    #[error("curve is not simple: {0}")]
    NotSimple(String),

    #[error("degenerate parametrization at marker {index}: |dX/dtheta| = {speed:e}")]
    DegenerateParametrization { index: usize, speed: f64 },

    #[error("kernel evaluated at the singularity (|x| = {0:e})")]
    Singularity(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("evaluation point is {distance:e} from the boundary, closer than {min:e}")]
    TooCloseToBoundary { distance: f64, min: f64 },

    #[error("non-tangent field at marker {index}: |<tau, n>| = {value:e}")]
    NotTangent { index: usize, value: f64 },

    #[error("jet ratio {ratio} exceeds the bound {bound}")]
    JetBoundViolated { ratio: f64, bound: f64 },

    #[error("whitney cover overlap {0} exceeds the allowed bound")]
    CubeOverlap(usize),

    #[error("step refused: dt * max_speed = {lhs:e} exceeds 0.25 * min gap = {rhs:e}; try dt <= {suggested:e}")]
    Cfl { lhs: f64, rhs: f64, suggested: f64 },

    #[error("runaway velocity {speed:e} exceeds bound {bound:e}")]
    Runaway { speed: f64, bound: f64 },

    #[error("curve file: {0}")]
    CurveFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
