use thiserror::Error;

/// Errors shared by all analysis and simulation entry points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("exp argument {arg} exceeds overflow guard ({limit})")]
    ExpOverflow { arg: f64, limit: f64 },

    #[error("state ({x}, {y}) violates the reduced-map domain -a <= x < y+1")]
    OutsideReducedDomain { x: f64, y: f64 },

    #[error("state ({x}, {y}) violates the shifted-map domain")]
    OutsideShiftedDomain { x: f64, y: f64 },

    #[error("fixed-point validity inequality failed: {which}")]
    FixedPointValidity { which: &'static str },

    #[error("m must be positive (got {0})")]
    NonPositiveM(f64),

    #[error("no period-doubling threshold: e^(s-1) - a - 1 <= 0")]
    NoPdThreshold,

    #[error("degenerate period-doubling threshold m0 = 4")]
    DegeneratePdThreshold,

    #[error("m = {m} too far from threshold m0 = {m0} (|m - m0| <= 0.5 enforced)")]
    TooFarFromPdThreshold { m: f64, m0: f64 },

    #[error("m = {0} outside (0, 4)")]
    MOutOfRange(f64),

    #[error("strong resonance at m = {m} (k = {k})")]
    Resonance { m: f64, k: u8 },

    #[error("a = {a} not above the Neimark-Sacker surface a_ns = {a_ns}")]
    BelowNsSurface { a: f64, a_ns: f64 },

    #[error("a = {a} too far from the Neimark-Sacker surface a_ns = {a_ns} (|a - a_ns| <= 0.1 enforced)")]
    TooFarFromNsSurface { a: f64, a_ns: f64 },

    #[error("step budget exceeded: {requested} > {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("invalid sweep: {0}")]
    InvalidSweep(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
