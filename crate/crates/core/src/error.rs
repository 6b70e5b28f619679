use alloc::string::String;

/// Errors produced by model validation and the induced-prior computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model specification violates a structural constraint.
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    /// A numeric parameter is outside its admissible range.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Truncation over `K` was requested for a point mass at infinity; the
    /// Dirichlet process has a dedicated code path with no such truncation.
    #[error("no finite truncation bound exists for a point mass at infinity")]
    InfiniteSupport,

    /// A requested number of data clusters exceeds the sample size.
    #[error("number of data clusters {k} exceeds sample size {n}")]
    KPlusTooLarge { k: u32, n: u32 },

    /// Conditioning on a zero-probability cluster count: no component count
    /// `K >= k` carries prior mass.
    #[error("conditioning on K+ = {k} is impossible: no K >= {k} has prior mass")]
    ImpossibleKPlus { k: u32 },

    /// Covered prior mass is too small for summaries to be meaningful.
    #[error("covered prior mass {covered} is below 0.5; summaries would be meaningless")]
    InsufficientCoverage { covered: f64 },

    /// Rejection sampling exhausted its draw budget.
    #[error("draw budget {budget} exhausted with only {accepted} accepted draws")]
    BudgetExhausted { budget: u64, accepted: u64 },

    /// A specification string does not follow the documented grammar.
    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },
}
