use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("size precondition failed: {0}")]
    Size(String),

    #[error("too large: {0}")]
    TooLarge(String),

    /// A postcondition that the hypotheses should have guaranteed did not hold.
    #[error("contract violated: {what} (witness {witness:?})")]
    Contract { what: String, witness: Vec<usize> },

    #[error("no extendable leaf at host vertex {vertex}{}", audit_suffix(.audit))]
    NoValidLeaf { vertex: usize, audit: Vec<String> },

    #[error("embedding failed at order index {index} (tree vertex {tree_vertex}): {cause}")]
    EmbedFailed {
        index: usize,
        tree_vertex: usize,
        cause: Box<Error>,
    },

    #[error("step {step} failed: {detail}")]
    StepFailure { step: usize, detail: String },

    #[error("stage {stage} failed: {detail}")]
    StageFailure { stage: usize, detail: String },

    #[error("residual {residual} exceeds bound {bound} after stage {stage}")]
    Residual {
        stage: usize,
        residual: usize,
        bound: f64,
    },

    #[error("retries exhausted; last violated property: {property}")]
    RetriesExhausted { property: String },

    #[error("matching failed; violating set {violating:?}")]
    MatchingFailure { violating: Vec<usize> },

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("no qualifying partition: {0}")]
    NoPartition(String),

    #[error("all branches failed: {0}")]
    AllBranchesFailed(String),

    #[error("internal error: {0}")]
    Internal(String),
}

fn audit_suffix(audit: &[String]) -> String {
    if audit.is_empty() {
        String::new()
    } else {
        format!("; failed hypotheses: {}", audit.join(", "))
    }
}
