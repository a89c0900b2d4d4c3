//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error enumeration.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition is violated (wavenumber outside the
    /// propagating band, site inside an obstacle, evaluation at a branch
    /// point, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or incomplete input data (unreadable sampler site,
    /// missing auxiliary table entry, bad obstacle file, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A numerical procedure failed to reach its target (quadrature cap,
    /// singular or ill-conditioned linear system, SVD failure).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A run configuration is inconsistent (duplicate basis entries,
    /// insufficient oracle margin, basis size mismatch).
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal consistency check failed; this signals a bug upstream
    /// rather than bad user input.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
