use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signature: d={d}, k={k} (both must be at least 1)")]
    InvalidSignature { d: usize, k: usize },

    #[error("symbol {symbol} out of range 1..={k}")]
    SymbolOutOfRange { symbol: u32, k: usize },

    #[error("expected {expected} children, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("not a bijection: {0}")]
    NotBijection(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration budget of {budget} node visits exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("exact count would need about {bits} bits, over the budget of {budget}")]
    BitBudgetExceeded { bits: u64, budget: u64 },

    #[error("precision must be at least 53 bits, got {0}")]
    Precision(u32),

    #[error("monomial {monomial} has coefficient {coefficient} but only {orderings} distinct orderings")]
    Unrealizable {
        monomial: String,
        coefficient: u64,
        orderings: u64,
    },

    #[error("unsupported signature for this operation: {0}")]
    WrongSignature(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perturbation bound |g_n| <= x_n violated at n={n}")]
    PerturbationBound { n: usize },
}

impl Error {
    /// Errors caused by running out of an enumeration, bit or precision budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::BitBudgetExceeded { .. } | Error::Precision(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
