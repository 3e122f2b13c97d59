use alloc::string::String;

/// Errors surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero-dispersion sample: all values are equal")]
    ZeroDispersion,

    #[error("simulation stalled at t = {time}: no worker can finish another gradient")]
    SimulationStalled { time: f64 },

    /// A bound recursion could not reach its target; `reached` is the last
    /// index `k` whose time is finite.
    #[error("recursion stalled after step {reached}: target work is unreachable")]
    RecursionStalled { reached: usize },

    #[error("{0}")]
    OutOfRegime(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
