use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field does not belong to this grid ({0})")]
    GridMismatch(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density is not normalized: integral = {integral}")]
    NotNormalized { integral: f64 },

    #[error("explicit step is unstable: {0}")]
    Unstable(String),

    #[error("time step too large: {0}")]
    StepTooLarge(String),

    #[error("CFL condition violated: max|u| dt / h = {courant:.3} > {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("density floor breached: min p = {min:e}")]
    DensityFloor { min: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("second difference unstable under step halving (relative change {relative:e})")]
    UnstableDerivative { relative: f64 },

    #[error("no multivalued structure: chemical potential must be positive, got {mu}")]
    NoMultivaluedStructure { mu: f64 },

    #[error("boundary kind not supported here: {0}")]
    Boundary(String),

    #[error("did not converge after {iterations} iterations ({what})")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("measurement set is incomplete (deviation {deviation:e})")]
    Incomplete { deviation: f64 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("negative probability {0:e}")]
    NegativeProbability(f64),

    #[error("history: {0}")]
    History(String),

    #[error("open path: loop must end where it starts and move one lattice step per edge")]
    OpenPath,

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
