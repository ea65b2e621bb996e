use thiserror::Error;

/// Errors produced by the simulator and workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid configuration, parameter combination, or file format.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while setting up a simulation.
    #[error("setup error: {0}")]
    Setup(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
