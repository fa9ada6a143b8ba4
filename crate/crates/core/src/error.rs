use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid atom spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("unknown level id `{0}`")]
    UnknownLevel(String),
    #[error("numeric domain error: {0}")]
    Domain(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("ill-conditioned probe ladder: {0}")]
    IllConditioned(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn ensure_positive(name: &str, x: f64) -> Result<()> {
    ensure_finite(name, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {x}")))
    }
}
