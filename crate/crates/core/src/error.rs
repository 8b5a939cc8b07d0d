use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid parameter `{field}`: {message}")]
    InvalidParam { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular input-output system at probe detuning {probe_detuning} rad/s")]
    Singular { probe_detuning: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error_estimate}")]
    Quadrature { estimate: f64, error_estimate: f64 },

    #[error("fit failed ({model}): {message}")]
    Fit { model: String, message: String },

    #[error("{failures} of {trials} Monte-Carlo trials failed")]
    MonteCarlo { failures: usize, trials: usize },
}

impl Error {
    pub fn param(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn fit(model: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Fit {
            model: model.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
            Error::InvalidParam { .. } => "invalid_param",
            Error::Domain(_) => "domain",
            Error::Singular { .. } => "singular",
            Error::Quadrature { .. } => "quadrature",
            Error::Fit { .. } => "fit",
            Error::MonteCarlo { .. } => "monte_carlo",
        }
    }
}
