use thiserror::Error;

/// Errors raised by model construction, estimators and the Monte Carlo engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: wrong dimensions, negative coordinates, empty grids.
    #[error("invalid input: {0}")]
    Input(String),

    /// Argument outside the domain where a closed form is finite.
    #[error("domain error: {what} requires {bound}, got {value}")]
    Domain {
        what: &'static str,
        bound: String,
        value: f64,
    },

    /// A hypothesis of the asymptotic results is violated by the model.
    #[error("model condition violated: {0}")]
    Condition(String),

    /// Numerical procedure did not produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn condition(msg: impl Into<String>) -> Error {
    Error::Condition(msg.into())
}
