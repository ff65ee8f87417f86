use std::fmt;

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the three failure classes the CLI reports:
/// constraint violations (exit 2) and everything else (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's precondition.
    #[error("usage: {0}")]
    Usage(String),

    /// A distribution failed validation (negative entries, bad normalization, shape mismatch).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// `Supp(P) ⊆ Supp(Q)` does not hold.
    #[error("domain: P({symbol}) = {p_mass} > 0 but Q({symbol}) = 0")]
    SupportViolation { symbol: usize, p_mass: f64 },

    /// A smoothing parameter outside `[0, 1)`.
    #[error("domain: epsilon must lie in [0, 1), got {0}")]
    Epsilon(f64),

    /// Materializing an object would exceed the configured cell cap.
    #[error("resource: {what} needs {required} cells, cap is {cap}")]
    Resource { what: String, required: u128, cap: u128 },

    /// Rate-region constraints failed; each entry names one violated constraint.
    #[error("constraint: {}", Diagnostics(.0))]
    Constraint(Vec<String>),

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse: {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

struct Diagnostics<'a>(&'a [String]);

impl fmt::Display for Diagnostics<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
