use thiserror::Error;

/// Errors raised across the crate. The CLI maps these onto process exit
/// codes: instability-class errors exit 2, assumption violations exit 3,
/// decomposition failures exit 4, everything else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("omega out of range: {0}")]
    BadOmega(String),
    #[error("bad size: {0}")]
    BadSize(String),
    #[error("not weight-balanced: {0}")]
    NotWeightBalanced(String),
    #[error("graph has no globally reachable node")]
    NoReachableNode,
    #[error("defective or ill-conditioned eigenvector matrix: {0}")]
    DefectiveOrIllConditioned(String),
    #[error("Jordan residual too large: {0}")]
    ResidualTooLarge(String),
    #[error("singular eigenvector matrix: {0}")]
    SingularR(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("gain assumption violated: {0}")]
    GainAssumptionViolated(String),
    #[error("output assumption violated: {0}")]
    OutputAssumptionViolated(String),
    #[error("covariance not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("repeated roots: {0}")]
    RepeatedRoots(String),
    #[error("distinct roots: {0}")]
    DistinctRoots(String),
    #[error("unstable: {0}")]
    Unstable(String),
    #[error("Laplacian is not normal: {0}")]
    NotNormal(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("Lyapunov solve ill-conditioned: {0}")]
    LyapunovIllConditioned(String),
    #[error("simulation horizon exceeded after {0} steps")]
    HorizonExceeded(usize),
    #[error("no observable mode with a complex eigenvalue")]
    NoComplexObservableMode,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
