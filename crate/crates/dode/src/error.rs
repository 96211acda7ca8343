use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions must be at least 2x2 (got {rows}x{cols})")]
    InvalidGridDimension { rows: usize, cols: usize },
    #[error("invalid uniform range: lower {low} exceeds upper {high}")]
    InvalidRange { low: f64, high: f64 },
    #[error("seed demand vector has zero norm")]
    ZeroSeedNorm,
    #[error("observed count vector has zero norm")]
    ZeroObservedNorm,
    #[error("no path from node {from} to node {to}")]
    NoPath { from: usize, to: usize },
    #[error("empty path choice set")]
    EmptyPathSet,
    #[error("descent direction is zero")]
    ZeroDirection,
    #[error("quadratic fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("sobol dimension {dim} exceeds the direction-number table ({max} dimensions)")]
    UnsupportedDimension { dim: usize, max: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: expected {expected} elements, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("model training failed: {0}")]
    TrainingFailure(String),
    #[error("budget {budget} is too small for {method} (needs at least {min})")]
    BudgetTooSmall {
        budget: u32,
        method: &'static str,
        min: u32,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
