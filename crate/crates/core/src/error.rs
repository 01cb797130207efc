use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {0} is all zero")]
    ZeroRow(usize),

    #[error("instance must have at least one row and one column")]
    EmptyInstance,

    #[error("entry {value} at ({row}, {col}) exceeds the bound U = {bound}")]
    EntryOutOfBounds { row: usize, col: usize, value: i64, bound: i64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rescaling direction has (near) zero norm")]
    ZeroDirection,

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),

    #[error("composition requires every epsilon <= 1, got {0}")]
    EpsilonTooLarge(f64),

    #[error("equality system is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("pivot block is singular")]
    SingularPivot,

    #[error("instance too large for the exact oracle ({candidates} candidate subsets)")]
    TooLarge { candidates: u128 },

    #[error("oracle supports dimension <= {max}, got {got}")]
    DimensionTooLarge { max: usize, got: usize },

    #[error("volume estimate of the reference system is zero")]
    DegenerateBefore,

    #[error("rejection sampler exhausted {attempts} attempts")]
    RejectionBudgetExceeded { attempts: u64 },

    #[error("sanitizer would exceed its round allowance of {0}")]
    BudgetExhausted(usize),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
