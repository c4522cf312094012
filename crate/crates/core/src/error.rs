use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent mesh: {0}")]
    Consistency(String),

    #[error("basis index {index} out of range (element has {n_basis} basis functions)")]
    IndexOutOfRange { index: usize, n_basis: usize },

    /// Nonpositive Jacobian determinant of a cell map, typically an inverted element.
    #[error("degenerate mapping on cell {cell} (det = {det:e})")]
    DegenerateMapping { cell: usize, det: f64 },

    #[error("eulerian mapping requested without a displacement vector")]
    MissingDisplacement,

    #[error("point #{index} at ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { index: usize, x: f64, y: f64 },

    #[error("singular deformation gradient (det F = {det:e})")]
    SingularDeformation { det: f64 },

    /// The direct solver hit a zero (or numerically zero) pivot.
    ///
    /// `index` is the unknown where the failure was located: the structural
    /// pivot column, or the unknown carrying the largest component of the
    /// detected null direction.
    #[error("singular matrix (pivot at unknown {index})")]
    SingularMatrix { index: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (|G| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("expression parse error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("expected {expected} expression components, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid value for '{key}' (line {line}): {message}")]
    InvalidValue {
        key: String,
        line: usize,
        message: String,
    },

    #[error("matrix entry ({row}, {col}) is outside the sparsity pattern")]
    OutsidePattern { row: usize, col: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
