use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("division by zero in GF({0})")]
    DivisionByZero(u64),
    #[error("polynomial has no coefficients")]
    EmptyPolynomial,
    #[error("interpolation needs at least one point")]
    NoPoints,
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid sharing parameters: {0}")]
    InvalidSharing(String),
    #[error("insufficient shares: need {needed}, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("leakage enumeration expects exactly k-1 = {expected} observations, got {got}")]
    ObservationCount { expected: usize, got: usize },
    #[error("invalid cyclic generator: {0}")]
    InvalidGenerator(String),
    #[error("storage p = {p} must satisfy 1 <= p <= e = {e}")]
    InvalidStorage { p: usize, e: usize },
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("infeasible (k ≤ n ≤ e violated): k = {k}, n = {n}, e = {e}")]
    Infeasible { k: usize, n: usize, e: usize },
    #[error("coverage violated: share {share} never meets partition {partition}")]
    CoverageViolated { share: usize, partition: usize },
    #[error("recovery condition unmet: partition {0} has fewer than k distinct shares")]
    RecoveryConditionUnmet(usize),
    #[error("eavesdropper must observe exactly z = {expected} distinct nodes, got {got}")]
    EavesdropperSize { expected: usize, got: usize },
    #[error("wait count t = {t} must be at least k = {k}")]
    WaitCountBelowThreshold { t: usize, k: usize },
    #[error("wait count exceeds available IRs: t = {t}, supply per partition = {supply}")]
    WaitCountExceedsSupply { t: usize, supply: usize },
    #[error("download contract violated: partition {0} has fewer than k distinct computed shares")]
    DownloadContract(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no feasible configuration for z = {0}")]
    NoFeasibleConfiguration(usize),
}
