use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size cap (partition order, Fock basis, word length) was exceeded.
    #[error("size limit exceeded: {what} is {got}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    /// Dimensions or orders of the inputs do not fit together.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operators act on different Fock spaces")]
    MixedSpace,

    /// A vacuum expectation would reach past the truncation depth.
    #[error("operator word can reach degree {needed}, space is truncated at depth {depth}")]
    DepthExceeded { needed: usize, depth: usize },

    #[error("no marginal law for family {0}")]
    MissingLaw(usize),

    #[error("marginal law of family {family} has no value for generator word {word:?}")]
    MissingMoment { family: usize, word: Vec<usize> },

    #[error("recursion depth {0} exceeded")]
    RecursionDepth(usize),

    /// An operation's precondition on its input does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("intervals overlap or are empty: {0}")]
    Intervals(String),

    #[error("insufficient order: {0}")]
    InsufficientOrder(String),

    #[error("moment sequence is not realizable: leading Hankel matrix of size {0} is not positive semidefinite")]
    NotRealizable(usize),
}
