use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence `{0}` is not a weight sequence on the tested range")]
    NotAWeightSequence(String),

    #[error("{what}: extremal index reached the end of the range ({index})")]
    RangeExhausted { what: &'static str, index: usize },

    #[error("input is quasianalytic: {0}")]
    QuasianalyticInput(String),

    #[error("no certified tail bound: {0}")]
    TailUnbounded(String),

    #[error("conjugate grid exhausted at s = {edge}")]
    GridExhausted { edge: f64 },

    #[error("weight is not o(t) on the tested range")]
    NotLittleO,

    #[error("order {requested} exceeds the cap {cap}")]
    OrderCapExceeded { requested: usize, cap: usize },

    #[error("collar radius {collar} exceeds the minimum feature scale {feature}")]
    DepthExhausted { collar: f64, feature: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("bump stages cannot fit: {0}")]
    StageOverflow(String),

    #[error("partition of unity and schedule use different decompositions")]
    IncompatibleGeometry,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
