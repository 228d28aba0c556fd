use thiserror::Error;

/// Errors produced by the geometric and numerical routines.
///
/// Variants are grouped by the stage that raises them. Several are
/// legitimate outcomes rather than bugs (`NoBranchFound`,
/// `DegenerateResidual`, `DenominatorDegenerate`), and callers such as the
/// envelope builder log them per branch instead of aborting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EilError {
    #[error("unknown curve `{0}`")]
    UnknownCurve(String),
    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),
    #[error("parameter {t} outside domain [{lo}, {hi}] of open arc")]
    OutsideDomain { t: f64, lo: f64, hi: f64 },
    #[error("singular affine map (det = {0})")]
    SingularMap(f64),
    #[error("irregular jet at t = {0} (vanishing velocity)")]
    Irregular(f64),
    #[error("inflection at t = {t}: |kappa| = {kappa:e} below threshold")]
    Inflection { t: f64, kappa: f64 },
    #[error("tangents at t = {t} and s = {s} are parallel")]
    ParallelTangents { t: f64, s: f64 },
    #[error("alpha = {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("operation requires a closed curve")]
    NotClosed,
    #[error("no branch found")]
    NoBranchFound,
    #[error("pairing residual vanishes on an open region (max |G| = {0:e})")]
    DegenerateResidual(f64),
    #[error("envelope point at infinity (denominator {den:e} vs scale {scale:e})")]
    DenominatorDegenerate { den: f64, scale: f64 },
    #[error("pair (t = {t}, s = {s}) violates the pairing condition: |G| = {residual:e}")]
    PairingViolated { t: f64, s: f64, residual: f64 },
    #[error("pair (t = {t}, s = {s}) does not have parallel tangents")]
    NotParallel { t: f64, s: f64 },
    #[error("fewer than two lines, or consecutive lines {0} and {1} are parallel")]
    ConsecutiveParallel(usize, usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("root finding failed: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = EilError> = std::result::Result<T, E>;
