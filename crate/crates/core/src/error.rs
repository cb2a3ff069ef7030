use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("series for {func} did not converge within {terms} terms")]
    NonConvergence { func: &'static str, terms: usize },

    #[error("quadrature tolerance not reached: estimate {estimate:e}, error bound {error:e}")]
    Tolerance { estimate: f64, error: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("could not bracket a root: {0}")]
    Bracket(String),

    #[error("unsupported Meijer G parameter pattern: {0}")]
    UnsupportedPattern(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }
}
