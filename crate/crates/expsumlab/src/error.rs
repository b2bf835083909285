//! Error taxonomy shared by every module and mirrored by the C interface
//! status codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation point lies outside the curve's natural domain.
    #[error("domain: {0}")]
    Domain(String),

    /// An index or interval reaches outside its admissible range.
    #[error("range: {0}")]
    Range(String),

    /// The configuration collapses (vanishing determinant, empty set, ...).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// The requested accuracy cannot be certified.
    #[error("precision: {0}")]
    Precision(String),

    /// The computation would exceed the configured budget.
    #[error("resource: {0}")]
    Resource(String),

    /// The operation is outside the supported surface.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Configuration file or override problems (CLI layer).
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for anything the caller wrote wrong,
    /// 3 for budget refusals, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Domain(_)
            | Error::Range(_)
            | Error::Unsupported(_)
            | Error::Config(_) => 2,
            Error::Resource(_) => 3,
            _ => 1,
        }
    }
}
