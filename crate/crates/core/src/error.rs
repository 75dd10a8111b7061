use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("pool needs at least one token")]
    EmptyTokenSet,
    #[error("token `{0}` listed more than once")]
    DuplicateToken(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("deposit for `{0}` must be positive")]
    NonPositiveDeposit(String),
    #[error("price must be positive, got {0}")]
    NonPositivePrice(String),
    #[error("quantity must be nonnegative, got {0}")]
    NegativeQuantity(String),
    #[error("price update must cover exactly the pool tokens")]
    PriceSetMismatch,
    #[error("fair prices must lie in [0,1] and sum to 1")]
    NotProbabilitySimplex,
    #[error("sequence {got} is not after {last}")]
    StaleSequence { last: u64, got: u64 },
    #[error("pool is empty")]
    EmptyPool,
    #[error("deposit has zero value")]
    ZeroValueDeposit,
    #[error("insufficient shares: requested {requested}, available {available}")]
    InsufficientShares { requested: String, available: String },
    #[error("removing every share would drain the pool; enable wind-down to allow it")]
    FullDrain,
    #[error("removal of value {removed} would exhaust the target balance {target}")]
    TargetBalanceExhausted { removed: String, target: String },
    #[error("cannot swap a token for itself")]
    SelfSwap,
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("reserve of `{0}` is zero")]
    ZeroReserve(String),
    #[error("per-pool target for `{0}` must be positive")]
    NonPositiveTarget(String),
    #[error("fee must lie in [0, 1)")]
    InvalidFee,
    #[error("unknown account `{0}`")]
    UnknownAccount(String),
    #[error("finite-difference step straddles a branch knot")]
    BranchStraddle,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseAt {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid event #{seq}: {message}")]
    InvalidEvent { seq: usize, message: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
