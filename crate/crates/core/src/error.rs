use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("DIMACS parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("eigendecomposition did not converge (dim {dim}, max |entry| {max_abs:.3e})")]
    Spectral { dim: usize, max_abs: f64 },

    #[error("groundspace dimension changed between axes: {0} vs {1}")]
    GroundspaceMismatch(usize, usize),

    #[error("gap {gap:.3e} at theta = {theta:.6} is below the floor {floor:.1e}; gap too small for finite plan")]
    GapTooSmall { theta: f64, gap: f64, floor: f64 },

    #[error("trace drifted to {trace:.12} at t = {t:.6}")]
    TraceDrift { t: f64, trace: f64 },

    #[error("corrupted state: {0}")]
    CorruptState(String),

    #[error("readout fixed point did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    FixedPoint { sweeps: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
