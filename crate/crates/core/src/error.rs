use std::path::PathBuf;

/// Every failure the library reports. Variants name the offending object so a
/// flagged experiment row can be traced back to its input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed domain specification: {0}")]
    MalformedSpec(String),
    #[error("insufficient boundary sampling at r = {r}: {found} samples, need {needed}")]
    InsufficientSampling { r: f64, found: usize, needed: usize },
    #[error("flatness {zeta} exceeds 1/2 at scale r = {r}")]
    FlatnessTooLarge { r: f64, zeta: f64 },
    #[error("degenerate scale r = {r}: {reason}")]
    DegenerateScale { r: f64, reason: String },
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("target node {index} at ({x}, {y}) lies outside the source mesh and its zero-extension zone")]
    Extrapolation { index: usize, x: f64, y: f64 },
    #[error("solver stopped after {iterations} iterations with relative residual {residual:.3e}; {diagnostic}")]
    NonConvergence { iterations: usize, residual: f64, diagnostic: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("insufficient ladder: {found} admissible scales, need {needed}")]
    InsufficientLadder { found: usize, needed: usize },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error in {path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("panicked: {0}")]
    Panic(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
