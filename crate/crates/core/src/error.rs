use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error)]
pub enum QibError {
    #[error("dimension mismatch on {axis}: expected {expected}, found {found}")]
    DimensionMismatch {
        axis: String,
        expected: usize,
        found: usize,
    },
    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("eigenvalue {eigenvalue:e} of {name} lies outside the approximation window [{lower:e}, {upper:e}]")]
    WindowViolation {
        name: String,
        eigenvalue: f64,
        lower: f64,
        upper: f64,
    },
    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("training step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<QibError>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl QibError {
    pub fn dims(axis: impl Into<String>, expected: usize, found: usize) -> Self {
        QibError::DimensionMismatch {
            axis: axis.into(),
            expected,
            found,
        }
    }

    /// Coarse category used by the command-line front end to pick an exit code.
    pub fn category(&self) -> ErrorCategory {
        match self {
            QibError::AtStep { source, .. } => source.category(),
            QibError::DimensionMismatch { .. }
            | QibError::NotHermitian { .. }
            | QibError::InvalidDensity(_)
            | QibError::IndexOutOfRange { .. }
            | QibError::UnsupportedBasis(_)
            | QibError::Validation(_)
            | QibError::Json(_) => ErrorCategory::Validation,
            QibError::Domain(_)
            | QibError::SupportViolation(_)
            | QibError::WindowViolation { .. }
            | QibError::Capacity(_)
            | QibError::Singular(_) => ErrorCategory::Numeric,
            QibError::Io(_) | QibError::Csv(_) => ErrorCategory::Io,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QibError::AtStep { source, .. } => source.kind(),
            QibError::DimensionMismatch { .. } => "dimension_mismatch",
            QibError::NotHermitian { .. } => "not_hermitian",
            QibError::InvalidDensity(_) => "invalid_density",
            QibError::Domain(_) => "domain",
            QibError::SupportViolation(_) => "support_violation",
            QibError::WindowViolation { .. } => "window_violation",
            QibError::IndexOutOfRange { .. } => "index_out_of_range",
            QibError::UnsupportedBasis(_) => "unsupported_basis",
            QibError::Capacity(_) => "capacity",
            QibError::Validation(_) => "validation",
            QibError::Singular(_) => "singular",
            QibError::Io(_) => "io",
            QibError::Json(_) => "json",
            QibError::Csv(_) => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numeric,
    Io,
}

pub type Result<T> = std::result::Result<T, QibError>;
