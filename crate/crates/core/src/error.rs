use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("blow-up at t = {t}: max|u| = {max_abs:e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("fit window error: {0}")]
    Window(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing configuration keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
