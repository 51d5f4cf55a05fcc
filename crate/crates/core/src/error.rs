use thiserror::Error;

/// Errors surfaced by the library. Variants mirror the failure modes of the
/// individual pipelines; the CLI maps precondition failures to exit code 2 and
/// promise/invariant violations to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mismatched root order: {0} vs {1}")]
    MismatchedModulus(u64, u64),
    #[error("division by zero in Q(zeta_m)")]
    DivisionByZero,
    #[error("instance size {n} exceeds configured cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("{0} is not an odd prime power")]
    NotPrimePower(u64),
    #[error("m = {0} is a power of two; the mod-p reduction gives no hardness there")]
    PowerOfTwoModulus(u64),
    #[error("phi(m) = {phi} is too low for degree {degree}")]
    DegreeTooLow { phi: usize, degree: usize },
    #[error("Vandermonde system is singular at the working ball resolution")]
    SingularSystem,
    #[error("matrix has negative entries; multiplicative interpolation requires nonnegative entries")]
    NegativeEntries,
    #[error("z-permanent of the input is zero")]
    ZeroPermanent,
    #[error("no grid point achieved the oracle halving invariant (broken adversary?)")]
    InvariantViolation,
    #[error("CAIP promise violated: nearest bounded algebraic integer lies in the excluded gap")]
    PromiseViolated,
    #[error("Berlekamp-Welch decoding failed: agreement promise does not hold")]
    DecodingFailure,
    #[error("every self-reduction repetition abstained")]
    AllFailed,
    #[error("numerical quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
    #[error("only a single shifted entry is supported by the norm-square oracle")]
    ShiftNotSupported,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
