use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function it was passed to.
    #[error("{name} = {value} is outside the domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// An iterative routine ran out of iterations before meeting its tolerance.
    #[error("{routine} did not converge within {cap} iterations")]
    NoConvergence { routine: &'static str, cap: usize },

    /// An ascending integer search passed its cap without satisfying the constraint.
    #[error("no sample size up to the search cap of {cap} satisfies {constraint}")]
    SearchCapExceeded { cap: u64, constraint: String },

    /// Planning or simulation inputs are inconsistent with each other.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}
