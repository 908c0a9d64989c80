use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero modulus")]
    ZeroModulus,
    #[error("element out of field: degree {degree} not below {n}")]
    OutOfField { degree: i64, n: usize },
    #[error("degree zero")]
    DegreeZero,
    #[error("modulus is reducible")]
    Reducible,

    #[error("output longer than input: {l} > {n}")]
    OutputLongerThanInput { l: usize, n: usize },
    #[error("intermediate width too small: {l} > {k}")]
    IntermediateTooSmall { l: usize, k: usize },
    #[error("family too large to audit: {needed} evaluations exceed budget {budget}")]
    AuditBudget { needed: f64, budget: f64 },
    #[error("invalid family descriptor: {0}")]
    Descriptor(String),
    #[error("seed length mismatch: expected {expected} bits, got {got}")]
    SeedLength { expected: usize, got: usize },
    #[error("input length mismatch: expected {expected} bits, got {got}")]
    InputLength { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix has non-finite entries")]
    NotFinite,
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("not positive: eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("trace exceeds one: {0}")]
    TraceTooLarge(f64),
    #[error("sigma support too small")]
    SupportTooSmall,
    #[error("trace mismatch: tr sigma = {sigma}, tr rho_B = {rho}")]
    TraceMismatch { sigma: f64, rho: f64 },
    #[error("matrix is not an isometry (deviation {0:e})")]
    NotIsometry(f64),
    #[error("min-entropy solver stalled with guessing probability in [{lower}, {upper}]")]
    SolverGap { lower: f64, upper: f64 },
    #[error("smoothing guarantee violated: distance {achieved} exceeds {target}")]
    SmoothingViolated { achieved: f64, target: f64 },

    #[error("unknown suite: {0}")]
    UnknownSuite(String),
    #[error("trials must be at least 1")]
    ZeroTrials,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
