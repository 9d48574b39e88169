use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("component {component} has zero length or area")]
    DegenerateComponent { component: usize },

    #[error("truncation {requested} is smaller than the kernel dimension {b0}")]
    TruncationBelowKernel { requested: usize, b0: usize },

    #[error("truncation {requested} exceeds the {available} available eigenpairs")]
    TruncationExceeded { requested: usize, available: usize },

    #[error("eigen-solver did not converge (worst residual {residual:.3e})")]
    NonConvergence { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fit range {0}")]
    BadFitRange(String),

    #[error("lambda = {lambda} is at or above the largest computed eigenvalue {mu_max}")]
    CountingTruncated { lambda: f64, mu_max: f64 },

    #[error("Z~ + I is singular (smallest singular value {sigma_min:.3e}); input is not accretive")]
    SingularCayley { sigma_min: f64 },

    #[error("operator is not accretive (min Hermitian eigenvalue {min_eig:.3e})")]
    NotAccretive { min_eig: f64 },

    #[error("mesh boundary and spectrum geometry disagree: {0}")]
    GeometryMismatch(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
