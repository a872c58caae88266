use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid value for `{field}`: {constraint}")]
    InvalidArgument { field: String, constraint: String },

    #[error("field is identically zero")]
    ZeroField,

    #[error("state is identically zero")]
    ZeroState,

    #[error("quartic term vanishes; the ray does not meet the Nehari manifold")]
    VanishingQuartic,

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("solution collapsed to the trivial state")]
    Collapse,

    #[error("negative overshoot {value:e} exceeds tolerance")]
    Negativity { value: f64 },

    #[error("reduced energy cache miss: {0}")]
    CacheMiss(String),

    #[error("configuration parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the run configuration rather than by a solve.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidGrid(_) | Error::InvalidArgument { .. } | Error::ConfigParse { .. }
        )
    }
}
