use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("matrix is not skew-symmetric (max |X + X^T| = {asymmetry:e})")]
    NotSkew { asymmetry: f64 },

    #[error("matrix is not a rotation (max |C^T C - I| = {orthogonality:e}, det = {det})")]
    NotRotation { orthogonality: f64, det: f64 },

    #[error("matrix is not symmetric positive definite: {reason}")]
    NotSymmetricPd { reason: String },

    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },

    #[error("column {index} is not a unit vector (norm {norm})")]
    NotUnitVector { index: usize, norm: f64 },

    #[error("invalid weights: {reason}")]
    InvalidWeights { reason: String },

    #[error("attitude profile is singular or ill-posed: {reason}")]
    SingularProfile { reason: String },

    #[error("attitude profile has non-positive determinant ({det:e}); the optimal proper rotation is not given by the QR/square-root solution")]
    ReflectionProfile { det: f64 },

    #[error("potential gradient yields a non-skew moment (max |M + M^T| = {residual:e})")]
    PotentialGradientNotSkewCompatible { residual: f64 },

    #[error("integration step rotates by {angle} rad, above the {limit} rad limit")]
    StepTooLarge { angle: f64, limit: f64 },

    #[error("invalid time span: {reason}")]
    InvalidTimeSpan { reason: String },

    #[error("angular-velocity update is inconsistent (symmetric residual {residual:e})")]
    InconsistentUpdate { residual: f64 },

    #[error("batch {index} has no angular-velocity measurement or gyro weight")]
    MissingGyro { index: usize },

    #[error("initial angular velocity is required without gyro measurements")]
    MissingInitialOmega,

    #[error("no measurement batches supplied")]
    NoBatches,

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
