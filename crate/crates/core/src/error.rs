use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AcnsError>;

#[derive(Debug, Error)]
pub enum AcnsError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("obstacle margin {margin:.4} is below the required {required:.4}")]
    ObstacleTouchesBox { margin: f64, required: f64 },
    #[error("domain has no fluid cells")]
    EmptyFluidRegion,
    #[error("fluid region is disconnected from the far field ({unreachable} cells unreachable)")]
    DisconnectedFluid { unreachable: usize },
    #[error("fields reference different geometries")]
    GeometryMismatch,
    #[error("spectral basis was built on a different geometry")]
    BasisMismatch,
    #[error("basis captures only {capture:.4} of the L2 mass (threshold {threshold:.4})")]
    InsufficientRank { capture: f64, threshold: f64 },
    #[error("norm exponent {0} is below 1")]
    BadExponent(f64),
    #[error("empty time series")]
    EmptySeries,
    #[error("mollifier radius {0} outside (0, 1)")]
    AlphaOutOfRange(f64),
    #[error(
        "Neumann right-hand side has nonzero integral {integral:.3e} (tolerance {tolerance:.3e})"
    )]
    IncompatibleRhs { integral: f64, tolerance: f64 },
    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("requested rank {requested} exceeds the admissible {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("bad initial data: {0}")]
    BadInitialData(String),
    #[error("blowup at step {step}: {reason}")]
    Blowup { step: usize, reason: String },
    #[error("stability bound violated: {0}")]
    CflViolation(String),
    #[error("snapshots are not uniformly spaced in time")]
    NonuniformCadence,
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },
    #[error("time offset {h} is not below the horizon {horizon}")]
    OffsetTooLarge { h: f64, horizon: f64 },
    #[error("time offset {0} is not a multiple of the snapshot cadence")]
    OffsetNotOnGrid(f64),
    #[error("need at least 3 positive points for a fit, got {0}")]
    DegeneratePoints(usize),
    #[error("trajectories use different grids or time axes")]
    GridMismatch,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("corrupt snapshot {path}: {reason}")]
    CorruptSnapshot { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
