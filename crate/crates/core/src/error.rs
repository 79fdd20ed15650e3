use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("{family} family unavailable: {reason}")]
    FamilyPrecondition { family: &'static str, reason: String },
    #[error("gauge frequency {lambda} is not a multiple of 2π/L on a box of length {length}")]
    IncommensurateGauge { lambda: f64, length: f64 },
    #[error("lattice budget exceeded: {0}")]
    Budget(String),
    #[error("integration unstable at t = {t}: {detail}")]
    Unstable { t: f64, detail: String },
    #[error("defect: {0}")]
    Defect(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
