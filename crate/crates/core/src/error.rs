use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain of the function")]
    Domain { what: &'static str, value: f64 },

    #[error("order {order} exceeds the supported maximum {max}")]
    OrderOverflow { order: i64, max: usize },

    #[error("{function}_{order}({x}) overflows double precision")]
    Overflow { function: &'static str, order: i64, x: f64 },

    #[error("invalid count for {what}: {value} (must be at least {min})")]
    InvalidCount { what: &'static str, value: usize, min: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },

    #[error("{0} is empty")]
    EmptySet(&'static str),

    #[error("invalid network shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },

    #[error("least-squares system is underdetermined ({rows} rows < {cols} columns)")]
    Underdetermined { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("mode series needs more than {max} terms to reach the tail bound {tolerance:e}")]
    InsufficientTerms { max: usize, tolerance: f64 },

    #[error("exact field is identically zero on the evaluation set")]
    ZeroReference,

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
