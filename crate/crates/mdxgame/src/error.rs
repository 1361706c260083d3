//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by solver, engine, and path operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the operation's admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The state left `[0, D]` under a strategy that must keep it inside.
    #[error("dynamics leave [0, D] at t = {time} (state = {value})")]
    Inadmissible { time: f64, value: f64 },

    /// The hitting-time game never terminates for this control.
    #[error("hitting time is infinite: control not in Q[x, strategy]")]
    NoFiniteHitting,

    /// The game value is infinite, so value-side operations are undefined.
    #[error("value infinite: -y < r/(4c)")]
    InfiniteValue,

    /// The response ODE is degenerate at `x = beta0`; a positive start-up
    /// delay is required.
    #[error("degenerate response: radicand vanishes at x = beta0, call with delta > 0")]
    DegenerateResponse,

    /// A suboptimality witness cannot be run against this strategy.
    #[error("witness inapplicable: {0}")]
    WitnessInapplicable(String),

    /// The value function is smooth here; there is nothing to mollify.
    #[error("smoothing undefined: g is differentiable at beta0")]
    AlreadySmooth,

    /// An operation that needs a convex holding cost received a non-convex one.
    #[error("holding cost is not convex: {0}")]
    NonConvexHolding(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
