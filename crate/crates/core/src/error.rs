//! Error types shared by every module.

use thiserror::Error;

/// Library-wide error type.
///
/// Variants are grouped by what went wrong rather than where: `Domain` for
/// arguments outside a function's mathematical domain, `Curve` for invalid
/// curve geometry, `Hypothesis` for named preconditions of a lemma-style
/// routine, `Degenerate` for inputs that make the requested quantity
/// meaningless, `Singular` for evaluations at a genuine singularity,
/// `Quadrature` for integration failures, `Config` for bad run
/// configurations, and `Io` for filesystem problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("curve error: {0}")]
    Curve(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for command-line reporting: configuration problems are 2,
    /// every other failure is 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }

    /// Short machine-readable kind tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Curve(_) => "curve",
            Error::Hypothesis(_) => "hypothesis",
            Error::Degenerate(_) => "degenerate",
            Error::Singular(_) => "singular",
            Error::Quadrature(_) => "quadrature",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
