use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient data{}: need {needed}, have {available}", class_suffix(.class))]
    InsufficientData {
        class: Option<usize>,
        needed: usize,
        available: usize,
    },
    #[error("degenerate data{}: selected tail has zero variance", class_suffix(.class))]
    DegenerateData { class: Option<usize> },
    #[error("weibull shape solver did not converge{}: {reason}", class_suffix(.class))]
    NoConvergence {
        class: Option<usize>,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {left} outputs vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("roc analysis needs both positives and negatives")]
    SingleClass,
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("bad magic {0:02x?}, expected \"OSAV\"")]
    BadMagic([u8; 4]),
    #[error("unsupported OSAV version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("trailing data: expected {expected} bytes, found {actual}")]
    TrailingData { expected: u64, actual: u64 },
    #[error("label {label} out of range at row {row}")]
    LabelOutOfRange { row: usize, label: i32 },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("label {0} belongs to neither the known nor the unknown classes")]
    UnknownLabel(i32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn class_suffix(class: &Option<usize>) -> String {
    match class {
        Some(c) => format!(" for class {c}"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit code: 1 for I/O and file-format failures, 2 for invalid
    /// input or configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Json { .. }
            | Error::BadMagic(_)
            | Error::UnsupportedVersion(_)
            | Error::TruncatedFile { .. }
            | Error::TrailingData { .. } => 1,
            Error::DimensionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::LabelOutOfRange { .. }
            | Error::NonFiniteValue { .. }
            | Error::InvalidSplit(_)
            | Error::UnknownLabel(_)
            | Error::InvalidArgument(_) => 2,
            Error::InsufficientData { .. }
            | Error::DegenerateData { .. }
            | Error::NoConvergence { .. }
            | Error::SingleClass
            | Error::ZeroVariance(_) => 3,
        }
    }

    /// Attach a class index to the per-class numerical errors.
    pub(crate) fn for_class(self, class: usize) -> Self {
        match self {
            Error::InsufficientData {
                needed, available, ..
            } => Error::InsufficientData {
                class: Some(class),
                needed,
                available,
            },
            Error::DegenerateData { .. } => Error::DegenerateData { class: Some(class) },
            Error::NoConvergence { reason, .. } => Error::NoConvergence {
                class: Some(class),
                reason,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
