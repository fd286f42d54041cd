use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent configuration; `field` is the offending key.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("fit failed: {0}")]
    Fit(#[source] pc2_core::Error),

    #[error("{0}")]
    Core(#[from] pc2_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0} acceptance criteria failed")]
    Verify(usize),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// Process exit status: 2 for configuration problems, 3 for fit failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Parse(_) => 2,
            CliError::Fit(_) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
