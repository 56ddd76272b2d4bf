use std::path::PathBuf;

/// Errors raised by the simulation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("alphabet of {size} candidates exceeds the cap of {cap}")]
    Complexity { size: u128, cap: u128 },
    #[error("no leaf inside the search sphere after {restarts} radius expansions")]
    RadiusExhausted { restarts: usize },
    #[error("equivalent channel is not tall enough for QR reduction ({rows}x{cols})")]
    NotTall { rows: usize, cols: usize },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the user's configuration document.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_) | Error::Unsupported(_) | Error::Framing(_))
    }
}
