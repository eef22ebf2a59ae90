use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("constraints infeasible: {0}")]
    Infeasible(String),
    #[error("reference has no mass where a constraint requires it: {0}")]
    SupportMismatch(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("alphabets of null and alternative differ: {0}")]
    AlphabetMismatch(String),
    #[error("alternative law has a zero entry: {0}")]
    NonpositiveAlternative(String),
    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("reference pmf has zero entries: {0}")]
    ZeroSupport(String),
    #[error("beta^2 outside the feasible interval: {0}")]
    InfeasibleBeta(String),
    #[error("codebook too large: {msg} (max feasible n = {max_n})")]
    SizeOverflow { msg: String, max_n: usize },
    #[error("degenerate scheme configuration: {0}")]
    DegenerateConfig(String),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
