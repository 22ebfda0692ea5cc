//! Variance-typed 3x3 second-order tensors.
//!
//! A second-order tensor on a 3-dimensional vector space comes in four
//! kinds depending on whether each slot takes a vector or a covector:
//! twice-covariant (`CovCov`, components `k_ij`), twice-contravariant
//! (`ConCon`, `t^ij`), and the two mixed kinds (`UpDown`, `t^i_j`, and
//! `DownUp`, `t_i^j`). Components are stored as a plain 3x3 matrix; the
//! variance and frame tags travel with the data and are checked at every
//! operation boundary, so composing incompatible kinds is rejected at
//! runtime rather than silently producing nonsense.
//!
//! Frames distinguish tensors living on the body (`Material`, charts
//! orthonormal at the reference placement) from tensors living on the
//! ambient Euclidean space (`Spatial`, orthonormal coordinates, so the
//! Euclidean metric has identity components).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 3x3 matrix of `f64` components.
pub type Mat3 = Matrix3<f64>;
/// 3-vector of `f64` components.
pub type Vec3 = Vector3<f64>;

/// Which kind of slot a tensor factor occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Vector,
    Covector,
}

/// Variance of a second-order tensor, read as a linear map
/// (the first index is the output, the second the input).
///
/// * `CovCov`   maps vectors to covectors (`k_ij`), e.g. metrics and strains;
/// * `ConCon`   maps covectors to vectors (`t^ij`), e.g. stresses;
/// * `UpDown`   is an endomorphism of vectors (`t^i_j`), e.g. velocity gradients;
/// * `DownUp`   is an endomorphism of covectors (`t_i^j`), adjoints of the above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variance {
    CovCov,
    ConCon,
    UpDown,
    DownUp,
}

impl Variance {
    /// Variance of the adjoint (dual) map. Swaps the two mixed kinds and
    /// fixes the purely covariant and contravariant kinds.
    pub fn adjoint(self) -> Self {
        match self {
            Variance::CovCov => Variance::CovCov,
            Variance::ConCon => Variance::ConCon,
            Variance::UpDown => Variance::DownUp,
            Variance::DownUp => Variance::UpDown,
        }
    }

    fn input(self) -> Slot {
        match self {
            Variance::CovCov | Variance::UpDown => Slot::Vector,
            Variance::ConCon | Variance::DownUp => Slot::Covector,
        }
    }

    fn output(self) -> Slot {
        match self {
            Variance::CovCov | Variance::DownUp => Slot::Covector,
            Variance::ConCon | Variance::UpDown => Slot::Vector,
        }
    }

    fn from_slots(output: Slot, input: Slot) -> Self {
        match (output, input) {
            (Slot::Covector, Slot::Vector) => Variance::CovCov,
            (Slot::Vector, Slot::Covector) => Variance::ConCon,
            (Slot::Vector, Slot::Vector) => Variance::UpDown,
            (Slot::Covector, Slot::Covector) => Variance::DownUp,
        }
    }

    /// Variance of the composition `self . rhs` when it type-checks.
    pub fn compose(self, rhs: Self) -> Option<Self> {
        if self.input() == rhs.output() {
            Some(Self::from_slots(self.output(), rhs.input()))
        } else {
            None
        }
    }
}

/// Whether a tensor lives on the body or on the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Material,
    Spatial,
}

/// A 3x3 second-order tensor with variance and frame tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    data: Mat3,
    variance: Variance,
    frame: Frame,
}

impl Tensor2 {
    /// Wraps components with the given tags. Rejects non-finite entries.
    pub fn new(data: Mat3, variance: Variance, frame: Frame) -> Result<Self> {
        if data.iter().all(|x| x.is_finite()) {
            Ok(Self { data, variance, frame })
        } else {
            Err(Error::NonFinite(format!("{variance:?} {frame:?} tensor")))
        }
    }

    /// Identity components with the given tags.
    pub fn identity(variance: Variance, frame: Frame) -> Self {
        Self { data: Mat3::identity(), variance, frame }
    }

    /// Zero components with the given tags.
    pub fn zeros(variance: Variance, frame: Frame) -> Self {
        Self { data: Mat3::zeros(), variance, frame }
    }

    /// The Euclidean metric `q` in spatial orthonormal coordinates
    /// (identity components, twice covariant).
    pub fn metric_q() -> Self {
        Self::identity(Variance::CovCov, Frame::Spatial)
    }

    /// The inverse Euclidean metric in spatial orthonormal coordinates.
    pub fn metric_q_inv() -> Self {
        Self::identity(Variance::ConCon, Frame::Spatial)
    }

    pub fn components(&self) -> &Mat3 {
        &self.data
    }

    pub fn into_components(self) -> Mat3 {
        self.data
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Symmetry predicate. Meaningful only for the purely covariant and
    /// purely contravariant kinds, where a tensor is symmetric exactly
    /// when it equals its adjoint; mixed kinds are rejected because their
    /// adjoint has the opposite variance.
    pub fn is_symmetric(&self, rel_tol: f64) -> Result<bool> {
        match self.variance {
            Variance::CovCov | Variance::ConCon => {
                let asym = (self.data - self.data.transpose()).norm();
                Ok(asym <= rel_tol * (1.0 + self.data.norm()))
            }
            v => Err(Error::VarianceMismatch(format!(
                "symmetry is undefined for mixed variance {v:?}"
            ))),
        }
    }

    /// Adjoint (dual) map: transposed components, variance re-tagged.
    /// Satisfies `(a.compose(b)).adjoint() == b.adjoint().compose(a.adjoint())`.
    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.transpose(),
            variance: self.variance.adjoint(),
            frame: self.frame,
        }
    }

    /// Composition as linear maps, with variance and frame checking.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.frame != rhs.frame {
            return Err(Error::FrameMismatch(format!(
                "cannot compose {:?} with {:?}",
                self.frame, rhs.frame
            )));
        }
        let variance = self.variance.compose(rhs.variance).ok_or_else(|| {
            Error::VarianceMismatch(format!(
                "cannot compose {:?} . {:?}",
                self.variance, rhs.variance
            ))
        })?;
        Ok(Self { data: self.data * rhs.data, variance, frame: self.frame })
    }

    /// Double contraction of a contravariant tensor with a covariant one
    /// (in either order): `t : k = t^ij k_ij`.
    pub fn ddot(&self, other: &Self) -> Result<f64> {
        let ok = matches!(
            (self.variance, other.variance),
            (Variance::ConCon, Variance::CovCov) | (Variance::CovCov, Variance::ConCon)
        );
        if !ok {
            return Err(Error::VarianceMismatch(format!(
                "double contraction needs one ConCon and one CovCov argument, got {:?} : {:?}",
                self.variance, other.variance
            )));
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch(
                "double contraction of tensors in different frames".into(),
            ));
        }
        Ok((self.data.transpose() * other.data).trace())
    }

    /// Sum of two tensors with identical tags.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_tags(other, "add")?;
        Ok(Self { data: self.data + other.data, ..*self })
    }

    /// Difference of two tensors with identical tags.
    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_tags(other, "subtract")?;
        Ok(Self { data: self.data - other.data, ..*self })
    }

    /// Scalar multiple, tags unchanged.
    pub fn scale(&self, s: f64) -> Self {
        Self { data: self.data * s, ..*self }
    }

    /// Same components re-tagged with another frame (used by pull-back
    /// and push-forward, which own the component transformation).
    pub(crate) fn with_frame(&self, frame: Frame) -> Self {
        Self { data: self.data, variance: self.variance, frame }
    }

    pub(crate) fn with_matrix(&self, data: Mat3) -> Self {
        Self { data, ..*self }
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    fn same_tags(&self, other: &Self, what: &str) -> Result<()> {
        if self.variance != other.variance {
            return Err(Error::VarianceMismatch(format!(
                "cannot {what} {:?} and {:?}",
                self.variance, other.variance
            )));
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch(format!(
                "cannot {what} tensors in frames {:?} and {:?}",
                self.frame, other.frame
            )));
        }
        Ok(())
    }
}

/// Metric transpose of a linear map `L` between Euclidean spaces `(E, g_E)`
/// and `(F, g_F)`: the unique `L^t` with `<L x, y>_F = <x, L^t y>_E`,
/// computed as `L^t = g_E^{-1} L* g_F`. Tags of `t` are preserved; the
/// metrics must be SPD twice-covariant tensors.
pub fn transpose_metric(t: &Tensor2, g_e: &Tensor2, g_f: &Tensor2) -> Result<Tensor2> {
    let ge = spd_metric_components(g_e)?;
    let gf = spd_metric_components(g_f)?;
    let ge_inv = ge.try_inverse().ok_or_else(|| {
        Error::NonSpdMetric("metric not invertible".into())
    })?;
    Ok(t.with_matrix(ge_inv * t.components().transpose() * gf))
}

/// Validates that `g` is a CovCov SPD metric and returns its components.
pub(crate) fn spd_metric_components(g: &Tensor2) -> Result<Mat3> {
    if g.variance() != Variance::CovCov {
        return Err(Error::NonSpdMetric(format!(
            "metric must be CovCov, got {:?}",
            g.variance()
        )));
    }
    let m = *g.components();
    let asym = (m - m.transpose()).norm();
    if asym > 1e-12 * (1.0 + m.norm()) {
        return Err(Error::NonSpdMetric("metric not symmetric".into()));
    }
    let eig = m.symmetric_eigenvalues();
    let (min, max) = (eig.min(), eig.max());
    if !(min > 1e-12 * max.max(0.0)) {
        return Err(Error::NonSpdMetric(format!(
            "eigenvalues not positive (min {min:.3e}, max {max:.3e})"
        )));
    }
    Ok(m)
}

/// Builds a symmetric matrix from Voigt components (11, 22, 33, 12, 13, 23).
pub fn voigt_to_sym(v: &[f64; 6]) -> Mat3 {
    Mat3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2])
}

/// Voigt components (11, 22, 33, 12, 13, 23) of a symmetric matrix.
pub fn sym_to_voigt(m: &Mat3) -> [f64; 6] {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]]
}

/// Symmetric part of a plain matrix.
pub(crate) fn sym(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

/// Skew-symmetric part of a plain matrix.
pub(crate) fn skew(m: &Mat3) -> Mat3 {
    (m - m.transpose()) * 0.5
}
