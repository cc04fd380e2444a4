use thiserror::Error;

/// Failure classes shared by every computation in the crate.
///
/// The variants map one-to-one onto the runner's exit codes, so callers
/// should not collapse them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the set where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A computation produced a non-finite value or a factorization broke down.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The request would exceed a configured evaluation budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    /// The caller did not meet a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!("{what} is not finite ({value})")))
    }
}
