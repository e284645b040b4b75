//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library. Each variant maps to a stable `kind` tag
/// used in the command-line JSON diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("free particle: {0}")]
    FreeParticle(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("caustic: |sin(omega*dt)| = {value:.3e} is below the guard {guard:.1e}")]
    Caustic { value: f64, guard: f64 },
    #[error("contour error: {0}")]
    Contour(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("convergence error: {0}")]
    Convergence(String),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Input(_) => "input",
            Error::UnsupportedRepresentation(_) => "unsupported_representation",
            Error::FreeParticle(_) => "free_particle",
            Error::Coverage(_) => "coverage",
            Error::Caustic { .. } => "caustic",
            Error::Contour(_) => "contour",
            Error::Resolution(_) => "resolution",
            Error::Convergence(_) => "convergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
