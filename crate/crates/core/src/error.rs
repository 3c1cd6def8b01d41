use thiserror::Error;

/// Errors shared across the certified-arithmetic pipelines.
///
/// Everything here is either a domain violation (caller handed us an input
/// outside an operation's contract) or a precision shortfall that the caller
/// can retry at a higher budget.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two certified enclosures overlap at the configured precision, so the
    /// comparison cannot be decided. Retry with a larger budget.
    #[error("incomparable enclosures at the configured precision (retry with a larger budget)")]
    IncomparableEnclosure,

    /// An enclosure is too wide to pin down a discrete quantity (e.g. a
    /// continued-fraction partial quotient or a floor).
    #[error("enclosure too wide to decide: {0}")]
    AmbiguousEnclosure(String),

    /// A requested exact value would exceed the materialization cap.
    #[error("unmaterializable at level 0: {0}")]
    Unmaterializable(String),

    /// Level-set inversion could not resolve the input against the critical
    /// values at the configured precision.
    #[error("trichotomy ambiguous: {0}")]
    TrichotomyAmbiguous(String),

    /// The requested inverse branch contains no preimage for this input.
    #[error("branch empty: {0}")]
    BranchEmpty(String),

    /// Polynomial-closure inputs do not share one exponent schedule.
    #[error("mixed schedules: {0}")]
    MixedSchedule(String),

    /// Pairwise-power inputs disagree on the shared anchor truncation.
    #[error("anchor mismatch: {0}")]
    AnchorMismatch(String),

    /// A scan could not classify some pairs at the configured precision.
    #[error("precision insufficient for {} undecided pair(s); first: {:?}", undecided.len(), undecided.first())]
    PrecisionInsufficient { undecided: Vec<(String, u64)> },

    /// A serialized object does not conform to the schema.
    #[error("malformed: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
