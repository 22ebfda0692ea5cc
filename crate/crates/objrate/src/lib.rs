//! Finite-strain kinematics and objective tensor rates.
//!
//! This crate computes the classical objective time derivatives of
//! continuum mechanics (Oldroyd, Truesdell, Zaremba-Jaumann, the Hill and
//! Marsden-Hughes families, Fiala's rate and its Truesdell variant,
//! Green-Naghdi, and the Xiao-Bruhns-Meyers co-rotational family) in three
//! interchangeable forms:
//!
//! * as spatial formulas on contravariant fields (stress-like),
//! * as spatial formulas on covariant fields (strain-like),
//! * as covariant derivatives `D_t e = d e/dt + Gamma(gamma_t, e)` on the
//!   space of metric tensors carried by the body, where `gamma = p*q` is
//!   the metric a placement `p` pulls back from Euclidean space.
//!
//! The three forms are exactly consistent, and the crate ships a numerical
//! harness that verifies the defining properties: objectivity under
//! superposed rigid motion for every rate, general covariance for the
//! Oldroyd rate alone, Noll's equivalence for stress distributions, and
//! the duality (pseudo-Leibniz) pairing between the covariant and
//! contravariant forms. A small fixed-step integrator drives rate-form
//! constitutive laws (hypo-elastic and Maxwell) along prescribed motions.
//!
//! Start with the `examples/` directory; each example is a runnable tour
//! of one capability. A thin `objrate` binary exposes batch subcommands
//! (`rates`, `verify`, `simulate`, `geodesic`) over JSON run configs.

pub mod cli;
pub mod error;
pub mod kinematics;
pub mod met;
pub mod motion;
pub mod rates;
pub mod simulate;
pub mod spd;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use kinematics::MotionState;
pub use motion::MotionPath;
pub use rates::RateKind;
pub use spd::SpdTensor;
pub use tensor::{Frame, Mat3, Tensor2, Variance, Vec3};
