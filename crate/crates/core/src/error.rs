use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("evaluation point {point} is within {dist:e} of the pole at {pole}")]
    PoleHit { point: String, pole: f64, dist: f64 },

    #[error("fiber is degenerate: roots {a} and {b} coincide within {dist:e}")]
    DegenerateFiber { a: String, b: String, dist: f64 },

    #[error("coupling is zero; caller must take the exact identity-map path")]
    ZeroCoupling,

    #[error("no preimage root matches the base point {base} (closest was {dist:e} away)")]
    BaseNotFound { base: String, dist: f64 },

    #[error("secular equation produced {found} real roots, expected {expected}")]
    RootCountMismatch { found: usize, expected: usize },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("Newton iteration diverged at homotopy parameter {lambda} (step {step:e})")]
    Divergence { lambda: f64, step: f64 },

    #[error("solution left the positive chamber at lambda = {lambda} ({what})")]
    ChamberExit { lambda: f64, what: String },

    #[error("Cauchy node collision: {0}")]
    NodeCollision(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("branch inversion failed for target {target}: {why}")]
    BranchInversionFailure { target: String, why: String },

    #[error("n = {0} must be even")]
    OddN(usize),

    #[error("invalid cycle type: {0}")]
    InvalidType(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
