use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no records with z = {0}")]
    EmptyArm(u8),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("invalid angles: {0}")]
    InvalidAngles(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("inadmissible model: exclusion residual {residual:.3e} exceeds {tol:.1e}")]
    InadmissibleModel { residual: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("{0}")]
    InvalidOperator(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
