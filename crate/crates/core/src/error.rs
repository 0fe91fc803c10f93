use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} = {requested} (cap {cap})")]
    Capacity {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("argument {x} is outside the sieve range 1..={limit}")]
    OutOfRange { x: f64, limit: u64 },

    #[error("cannot parse scheme {text:?}: {reason}")]
    Parse { text: String, reason: String },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("scheme does not cancel (sum of weight/index = {sum}); E(x) is not periodic")]
    NotPeriodic { sum: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{side} matching did not reach a steady state within {cap} positions")]
    SteadyState { side: &'static str, cap: u64 },

    #[error("step function does not dominate E on the {side} side at x = {x} (step {step}, E {e})")]
    Domination {
        side: &'static str,
        x: u64,
        step: i64,
        e: i64,
    },

    #[error("recurrence has no fixed point: I - M is singular")]
    Singular,

    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
