use thiserror::Error;

/// Errors shared across the whole crate. Each variant names the offending
/// object or location so reports stay actionable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad probabilities: {0}")]
    BadProbabilities(String),

    #[error("partition at time 0 must be the single atom containing every outcome")]
    NontrivialRoot,

    #[error("partition at time {time} does not refine the partition at time {}", time - 1)]
    NonRefiningFiltration { time: usize },

    #[error("bad partition at time {time}: {reason}")]
    BadPartition { time: usize, reason: String },

    #[error("time {time} out of range 0..={horizon}")]
    TimeOutOfRange { time: usize, horizon: usize },

    #[error("{name} is not measurable at time {time}")]
    NotMeasurable { time: usize, name: String },

    #[error("value count mismatch for {name}: expected {expected}, got {got}")]
    ValueCountMismatch {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("empty family of random variables")]
    EmptyFamily,

    #[error("operands live on different probability spaces")]
    SpaceMismatch,

    #[error("alpha must lie in {range}, got {alpha}")]
    BadAlpha { alpha: f64, range: &'static str },

    #[error("x must be a finite nonnegative real, got {x}")]
    BadX { x: f64 },

    #[error("rule is one-step only: requires s = t+1, got t={t}, s={s}")]
    NotOneStep { t: usize, s: usize },

    #[error("times must satisfy t < s, got t={t}, s={s}")]
    TimeOrder { t: usize, s: usize },

    #[error("transform is not an invertible monotone map: {0}")]
    NonInvertibleTransform(String),

    #[error("benchmark generator set is empty")]
    EmptyBenchmark,

    #[error("kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("equivalent conditions disagree (implementation bug): {0}")]
    EquivalenceBroken(String),

    #[error("update rule is not projective: {0}")]
    NotProjective(String),

    #[error("family is not pointwise non-increasing in x: {0}")]
    NotDecreasingFamily(String),

    #[error("index is not translation invariant: {0}")]
    NotTranslationInvariant(String),

    #[error("index is not independent of the past: {0}")]
    NotIndependentOfPast(String),

    #[error("bracket exhausted or inconsistent: {0}")]
    BracketExhausted(String),

    #[error("hypothesis `{hypothesis}` failed: {detail}")]
    HypothesisFailed { hypothesis: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
