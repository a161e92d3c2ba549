use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("all weights are zero")]
    DegenerateWeights,

    #[error("scale estimate is zero (more than half of the residuals coincide)")]
    DegenerateScale,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("column `{0}` is constant and cannot be standardized")]
    DegenerateColumn(String),

    #[error("IRLS did not converge after {iterations} iterations")]
    Convergence {
        iterations: usize,
        /// Coefficients of the last iterate.
        last: Vec<f64>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short class name used on the diagnostic stream of the command-line tool.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::InvalidInput(_) => "InvalidInputError",
            Error::Domain(_) => "DomainError",
            Error::DegenerateWeights => "DegenerateWeightsError",
            Error::DegenerateScale => "DegenerateScaleError",
            Error::DegenerateFit(_) => "DegenerateFitError",
            Error::DegenerateColumn(_) => "DegenerateColumnError",
            Error::Convergence { .. } => "ConvergenceError",
            Error::Schema(_) => "SchemaError",
            Error::Parse { .. } => "ParseError",
            Error::Index { .. } => "IndexError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateFit(_) | Error::DegenerateScale | Error::DegenerateWeights)
    }
}
