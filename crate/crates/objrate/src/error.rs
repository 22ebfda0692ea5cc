//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by kinematics, tensor algebra, geometry and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A metric argument failed the symmetric positive definite check.
    #[error("metric is not symmetric positive definite: {0}")]
    NonSpdMetric(String),

    /// An input that must be SPD (or SPD with respect to a metric) is not.
    #[error("input is not symmetric positive definite: {0}")]
    NonSpdInput(String),

    /// Deformation gradient with non-positive determinant.
    #[error("deformation gradient is singular or orientation-reversing (det F = {det})")]
    SingularF { det: f64 },

    /// Tensor variance tags incompatible with the requested operation.
    #[error("variance mismatch: {0}")]
    VarianceMismatch(String),

    /// Tensor frame tags incompatible with the requested operation.
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    /// A rate that needs a reference configuration was called without one.
    #[error("reference configuration required")]
    MissingReference,

    /// A symmetric tensor argument is not symmetric within tolerance.
    #[error("input tensor is not symmetric: {0}")]
    AsymmetricInput(String),

    /// Mass density vanished or went negative.
    #[error("mass density must be positive (got {0})")]
    ZeroDensity(f64),

    /// Query time outside a sampled motion's grid.
    #[error("time {t} outside sampled range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    /// Integrator step produced symmetry drift above the per-step bound.
    #[error("integration step rejected at t = {t}: symmetry drift {drift:.3e} exceeds {limit:.3e}")]
    StepRejected { t: f64, drift: f64, limit: f64 },

    /// Non-finite components where finite reals are required.
    #[error("non-finite tensor components: {0}")]
    NonFinite(String),

    /// Invalid run configuration (bad field, unknown rate name, missing file).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
