use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("d must exceed 1 (got {0})")]
    Dimension(f64),
    #[error("unresolved oscillation: requested frequency {requested} exceeds the maximum admissible {max_admissible}")]
    Resolution { requested: f64, max_admissible: f64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid multiplier: {0}")]
    Multiplier(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dimension(d: f64) -> Result<()> {
    if d.is_finite() && d > 1.0 {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}
