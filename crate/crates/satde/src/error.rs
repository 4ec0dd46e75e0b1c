use thiserror::Error;

/// Errors produced by density arithmetic, configuration validation and
/// verification sweeps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("invalid configuration: {field}: {msg}")]
    InvalidConfig { field: String, msg: String },

    #[error("saturation level out of range: {0}")]
    SaturationRange(String),

    #[error("density is not symmetric (defect {defect:.3e} > tol {tol:.3e})")]
    NotSymmetric { defect: f64, tol: f64 },

    #[error("decomposition level excludes mass: {0}")]
    DecompositionSupport(String),

    #[error("threshold bracket is not monotone: success(lo)={lo_ok}, success(hi)={hi_ok}")]
    ThresholdBracket { lo_ok: bool, hi_ok: bool },

    #[error("bound violated at iteration {iter}: measured {measured:.6e} > bound {bound:.6e} ({what})")]
    BoundViolation {
        what: String,
        iter: usize,
        measured: f64,
        bound: f64,
    },

    #[error("state left the contraction window at iteration {iter}: {what}")]
    OutOfWindow { what: String, iter: usize },

    #[error("stability window infeasible: {0}")]
    WindowInfeasible(String),

    #[error("degree sequence infeasible: {0}")]
    InfeasibleGraph(String),

    #[error("parse error in `{input}`: {msg}")]
    Parse { input: String, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
