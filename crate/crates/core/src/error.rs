use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its domain.
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A documented precondition of an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A diagonal covariance entry blew up or became non-finite.
    #[error("integration diverged at t = {t:e} s ({component} = {value:e})")]
    Divergence {
        t: f64,
        component: &'static str,
        value: f64,
    },

    #[error("config error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config error for key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("CSV parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bracket does not straddle the squeezing threshold: {0}")]
    Bracket(String),

    #[error("non-monotone response along the search axis: {0}")]
    NonMonotone(String),

    /// Wraps an error raised while evolving one collective mode.
    #[error("{mode} mode: {source}")]
    Mode {
        mode: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::ConfigSyntax { .. }
                | Error::ConfigKey { .. }
                | Error::UnknownPreset(_)
                | Error::Precondition(_)
                | Error::Bracket(_)
        )
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            3
        } else if self.is_divergence() {
            4
        } else if matches!(self, Error::Io { .. }) {
            5
        } else {
            1
        }
    }

    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Mode { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
