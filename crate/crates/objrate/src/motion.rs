//! Motions as paths of placements of the body into Euclidean space.
//!
//! Every shipped motion is affine in the material point: `p(t, X) = F(t) X + c(t)`
//! with `F` independent of `X`, so velocity gradients are spatially
//! homogeneous and all kinematic fields are exact closed forms. A motion
//! carries its own reference tangent `F0` (the placement the body charts
//! are orthonormal against); for most families this is `F` at `t = 0`.
//!
//! Sampled motions store `F` (and optionally the translation) on a uniform
//! time grid and differentiate by centered differences, one-sided at the
//! endpoints, with O(h^2) accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::{self, SpdTensor};
use crate::tensor::{skew, Frame, Mat3, Tensor2, Variance, Vec3};

/// Rotation about a fixed unit axis with angle `phi(t) = phi0 + omega t + amp sin(freq t)`.
#[derive(Debug, Clone)]
pub struct RotationSpec {
    axis: Vec3,
    phi0: f64,
    omega: f64,
    amp: f64,
    freq: f64,
}

impl RotationSpec {
    pub fn identity() -> Self {
        Self { axis: Vec3::z(), phi0: 0.0, omega: 0.0, amp: 0.0, freq: 0.0 }
    }

    /// Fixed rotation by `angle` about `axis`.
    pub fn constant(axis: Vec3, angle: f64) -> Self {
        Self { axis: axis.normalize(), phi0: angle, omega: 0.0, amp: 0.0, freq: 0.0 }
    }

    /// Steady spin `phi = omega t` about `axis`.
    pub fn spin(axis: Vec3, omega: f64) -> Self {
        Self { axis: axis.normalize(), phi0: 0.0, omega, amp: 0.0, freq: 0.0 }
    }

    /// Non-uniform spin `phi = omega t + amp sin(freq t)`.
    pub fn wobble(axis: Vec3, omega: f64, amp: f64, freq: f64) -> Self {
        Self { axis: axis.normalize(), phi0: 0.0, omega, amp, freq }
    }

    fn angle(&self, t: f64) -> (f64, f64) {
        (
            self.phi0 + self.omega * t + self.amp * (self.freq * t).sin(),
            self.omega + self.amp * self.freq * (self.freq * t).cos(),
        )
    }

    /// Rotation matrix and its time derivative at `t`.
    pub fn at(&self, t: f64) -> (Mat3, Mat3) {
        let (phi, phi_dot) = self.angle(t);
        let k = axis_hat(&self.axis);
        let q = Mat3::identity() + k * phi.sin() + k * k * (1.0 - phi.cos());
        (q, k * q * phi_dot)
    }
}

fn axis_hat(axis: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -axis.z, axis.y,
        axis.z, 0.0, -axis.x,
        -axis.y, axis.x, 0.0,
    )
}

/// Translation `c(t) = c0 + v t + sin(freq t) w`.
#[derive(Debug, Clone)]
pub struct TranslationSpec {
    c0: Vec3,
    v: Vec3,
    w: Vec3,
    freq: f64,
}

impl TranslationSpec {
    pub fn zero() -> Self {
        Self { c0: Vec3::zeros(), v: Vec3::zeros(), w: Vec3::zeros(), freq: 0.0 }
    }

    pub fn uniform(v: Vec3) -> Self {
        Self { c0: Vec3::zeros(), v, w: Vec3::zeros(), freq: 0.0 }
    }

    pub fn harmonic(c0: Vec3, v: Vec3, w: Vec3, freq: f64) -> Self {
        Self { c0, v, w, freq }
    }

    pub fn at(&self, t: f64) -> (Vec3, Vec3) {
        (
            self.c0 + self.v * t + self.w * (self.freq * t).sin(),
            self.v + self.w * self.freq * (self.freq * t).cos(),
        )
    }
}

/// Path of Euclidean isometries `g(t) x = Q(t) x + c(t)`.
#[derive(Debug, Clone)]
pub struct RigidPath {
    pub rotation: RotationSpec,
    pub translation: TranslationSpec,
    id: String,
}

impl RigidPath {
    pub fn new(id: impl Into<String>, rotation: RotationSpec, translation: TranslationSpec) -> Self {
        Self { rotation, translation, id: id.into() }
    }

    pub fn identity() -> Self {
        Self::new("id", RotationSpec::identity(), TranslationSpec::zero())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `(Q, Q_t, c, c_t)` at time `t`.
    pub fn at(&self, t: f64) -> (Mat3, Mat3, Vec3, Vec3) {
        let (q, q_t) = self.rotation.at(t);
        let (c, c_t) = self.translation.at(t);
        (q, q_t, c, c_t)
    }

    /// Checks `Q^T Q = I` on the given sample times.
    pub fn validate(&self, times: &[f64]) -> Result<()> {
        for &t in times {
            let (q, _, _, _) = self.at(t);
            let err = (q.transpose() * q - Mat3::identity()).norm();
            if err > 1e-12 {
                return Err(Error::Config(format!(
                    "rigid path {} not orthogonal at t = {t} (residual {err:.3e})",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Linear part of an affine path.
#[derive(Debug, Clone)]
pub enum LinearSpec {
    /// `P(t) = diag(exp(a t), exp(b t), exp(c t))`.
    DiagExp { rates: [f64; 3] },
    /// `P(t) = I + t M` (valid while `det P > 0`).
    Shift { m: Mat3 },
    /// Orthogonal path.
    Rotation(RotationSpec),
}

/// Path of affine maps `phi(t) x = P(t) x + c(t)` with `det P(t) > 0`.
#[derive(Debug, Clone)]
pub struct AffinePath {
    pub linear: LinearSpec,
    pub translation: TranslationSpec,
    id: String,
}

impl AffinePath {
    pub fn new(id: impl Into<String>, linear: LinearSpec, translation: TranslationSpec) -> Self {
        Self { linear, translation, id: id.into() }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `(P, P_t, c, c_t)` at time `t`.
    pub fn at(&self, t: f64) -> (Mat3, Mat3, Vec3, Vec3) {
        let (p, p_t) = match &self.linear {
            LinearSpec::DiagExp { rates } => {
                let d = Vec3::new((rates[0] * t).exp(), (rates[1] * t).exp(), (rates[2] * t).exp());
                (
                    Mat3::from_diagonal(&d),
                    Mat3::from_diagonal(&Vec3::new(rates[0] * d.x, rates[1] * d.y, rates[2] * d.z)),
                )
            }
            LinearSpec::Shift { m } => (Mat3::identity() + m * t, *m),
            LinearSpec::Rotation(r) => r.at(t),
        };
        let (c, c_t) = self.translation.at(t);
        (p, p_t, c, c_t)
    }
}

impl From<RigidPath> for AffinePath {
    fn from(g: RigidPath) -> Self {
        AffinePath {
            id: g.id.clone(),
            linear: LinearSpec::Rotation(g.rotation),
            translation: g.translation,
        }
    }
}

/// Closed-form motion families. Each yields `F(t)` and `F_t(t)` exactly.
#[derive(Debug, Clone)]
enum Family {
    /// `F = Q(t)`; isometric motion.
    Rigid(RotationSpec),
    /// `F = exp(alpha t) I`.
    Dilation { alpha: f64 },
    /// `F = I + (exp(alpha t) - 1) e_a (x) e_a`: uniaxial extension.
    Uniaxial { alpha: f64, axis: usize },
    /// `F = I + rate t  e_1 (x) e_2`.
    SimpleShear { rate: f64 },
    /// `F = Q(t) S(t)`, spin composed with uniaxial stretch.
    RotStretch { rotation: RotationSpec, alpha: f64, axis: usize },
    /// `F = U exp(t A) F0` where `A` is symmetric w.r.t. the metric `C`.
    Extension { u: Mat3, a: Mat3, c_chol: Mat3, f0: Mat3 },
}

impl Family {
    fn at(&self, t: f64) -> (Mat3, Mat3) {
        match self {
            Family::Rigid(r) => r.at(t),
            Family::Dilation { alpha } => {
                let s = (alpha * t).exp();
                (Mat3::identity() * s, Mat3::identity() * (alpha * s))
            }
            Family::Uniaxial { alpha, axis } => {
                let mut f = Mat3::identity();
                let mut f_t = Mat3::zeros();
                let s = (alpha * t).exp();
                f[(*axis, *axis)] = s;
                f_t[(*axis, *axis)] = alpha * s;
                (f, f_t)
            }
            Family::SimpleShear { rate } => {
                let mut f = Mat3::identity();
                let mut f_t = Mat3::zeros();
                f[(0, 1)] = rate * t;
                f_t[(0, 1)] = *rate;
                (f, f_t)
            }
            Family::RotStretch { rotation, alpha, axis } => {
                let (q, q_t) = rotation.at(t);
                let mut s = Mat3::identity();
                let mut s_t = Mat3::zeros();
                let e = (alpha * t).exp();
                s[(*axis, *axis)] = e;
                s_t[(*axis, *axis)] = alpha * e;
                (q * s, q_t * s + q * s_t)
            }
            Family::Extension { u, a, c_chol, f0 } => {
                let aw = spd::whiten(c_chol, a) * t;
                let ew = spd::sym_matfn(&crate::tensor::sym(&aw), f64::exp);
                let exp_ta = spd::unwhiten(c_chol, &ew);
                (u * exp_ta * f0, u * a * exp_ta * f0)
            }
        }
    }
}

/// Deformation frame of a motion at one time: tangent map, its rate, and
/// the translation part of the placement.
#[derive(Debug, Clone)]
pub struct FrameMotion {
    pub f: Mat3,
    pub f_t: Mat3,
    pub c: Vec3,
    pub c_t: Vec3,
}

#[derive(Debug, Clone)]
pub struct ClosedFormMotion {
    family: Family,
    translation: TranslationSpec,
    f0: Mat3,
    id: String,
}

/// Motion sampled on a uniform time grid.
#[derive(Debug, Clone)]
pub struct SampledMotion {
    t0: f64,
    dt: f64,
    f: Vec<Mat3>,
    f_dot: Vec<Mat3>,
    c: Vec<Vec3>,
    c_dot: Vec<Vec3>,
    f0: Mat3,
    id: String,
}

impl SampledMotion {
    /// Builds from raw samples; `c` defaults to zero when empty.
    pub fn new(id: impl Into<String>, t0: f64, dt: f64, f: Vec<Mat3>, c: Vec<Vec3>) -> Result<Self> {
        if f.len() < 3 {
            return Err(Error::Config("sampled motion needs at least 3 samples".into()));
        }
        if dt <= 0.0 {
            return Err(Error::Config("sampled motion needs dt > 0".into()));
        }
        let c = if c.is_empty() { vec![Vec3::zeros(); f.len()] } else { c };
        if c.len() != f.len() {
            return Err(Error::Config("sampled motion: c and F sample counts differ".into()));
        }
        let f_dot = fd_series(&f, dt);
        let c_dot = fd_series(&c, dt);
        let f0 = f[0];
        Ok(Self { t0, dt, f, f_dot, c, c_dot, f0, id: id.into() })
    }

    /// Samples a closed-form motion onto a grid of `n + 1` nodes on `[t0, t1]`.
    pub fn from_motion(m: &MotionPath, t0: f64, t1: f64, n: usize) -> Result<Self> {
        let dt = (t1 - t0) / n as f64;
        let mut f = Vec::with_capacity(n + 1);
        let mut c = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let fr = m.frame_at(t0 + dt * k as f64)?;
            f.push(fr.f);
            c.push(fr.c);
        }
        let mut s = Self::new(format!("sampled[{}]", m.id()), t0, dt, f, c)?;
        s.f0 = m.reference();
        Ok(s)
    }

    pub fn grid_times(&self) -> Vec<f64> {
        (0..self.f.len()).map(|k| self.t0 + self.dt * k as f64).collect()
    }

    fn at(&self, t: f64) -> Result<FrameMotion> {
        let span = self.dt * (self.f.len() - 1) as f64;
        let t1 = self.t0 + span;
        let eps = 1e-9 * span.max(1.0);
        if t < self.t0 - eps || t > t1 + eps {
            return Err(Error::OutOfRange { t, t0: self.t0, t1 });
        }
        let s = ((t - self.t0) / self.dt).clamp(0.0, (self.f.len() - 1) as f64);
        let k = (s.round() as usize).min(self.f.len() - 1);
        if (s - k as f64).abs() * self.dt <= eps {
            return Ok(FrameMotion {
                f: self.f[k],
                f_t: self.f_dot[k],
                c: self.c[k],
                c_t: self.c_dot[k],
            });
        }
        // between nodes: linear interpolation of samples and of the
        // differenced derivatives (same O(h^2) accuracy class)
        let k0 = s.floor() as usize;
        let w = s - k0 as f64;
        Ok(FrameMotion {
            f: self.f[k0] * (1.0 - w) + self.f[k0 + 1] * w,
            f_t: self.f_dot[k0] * (1.0 - w) + self.f_dot[k0 + 1] * w,
            c: self.c[k0] * (1.0 - w) + self.c[k0 + 1] * w,
            c_t: self.c_dot[k0] * (1.0 - w) + self.c_dot[k0 + 1] * w,
        })
    }
}

/// Centered differences inside, one-sided 3-point stencils at the ends.
fn fd_series<T>(xs: &[T], dt: f64) -> Vec<T>
where
    T: Copy
        + std::ops::Sub<T, Output = T>
        + std::ops::Add<T, Output = T>
        + std::ops::Mul<f64, Output = T>,
{
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let d = if k == 0 {
            (xs[1] * 4.0 - xs[2] - xs[0] * 3.0) * (1.0 / (2.0 * dt))
        } else if k == n - 1 {
            (xs[n - 1] * 3.0 - xs[n - 2] * 4.0 + xs[n - 3]) * (1.0 / (2.0 * dt))
        } else {
            (xs[k + 1] - xs[k - 1]) * (1.0 / (2.0 * dt))
        };
        out.push(d);
    }
    out
}

/// A motion: closed form, sampled, or a motion with a superposed path of
/// (possibly non-rigid) affine space maps.
#[derive(Debug, Clone)]
pub enum MotionPath {
    ClosedForm(ClosedFormMotion),
    Sampled(SampledMotion),
    Superposed { base: Box<MotionPath>, overlay: AffinePath },
}

impl MotionPath {
    /// Rigid motion `p(t, X) = Q(t) X + c(t)`.
    pub fn rigid(rotation: RotationSpec, translation: TranslationSpec) -> Self {
        Self::closed(Family::Rigid(rotation), translation, "rigid")
    }

    /// Uniform dilation `p(t, X) = exp(alpha t) X`.
    pub fn dilation(alpha: f64) -> Self {
        Self::closed(Family::Dilation { alpha }, TranslationSpec::zero(), "dilation")
    }

    /// Uniaxial extension along a coordinate axis.
    pub fn uniaxial(alpha: f64, axis: usize) -> Self {
        Self::closed(Family::Uniaxial { alpha, axis: axis.min(2) }, TranslationSpec::zero(), "uniaxial")
    }

    /// Simple shear `F = I + rate t  e_1 (x) e_2`.
    pub fn simple_shear(rate: f64) -> Self {
        Self::closed(Family::SimpleShear { rate }, TranslationSpec::zero(), "shear")
    }

    /// Spin composed with a uniaxial stretch.
    pub fn rot_stretch(rotation: RotationSpec, alpha: f64, axis: usize) -> Self {
        Self::closed(
            Family::RotStretch { rotation, alpha, axis: axis.min(2) },
            TranslationSpec::zero(),
            "rot-stretch",
        )
    }

    fn closed(family: Family, translation: TranslationSpec, id: &str) -> Self {
        let f0 = family.at(0.0).0;
        MotionPath::ClosedForm(ClosedFormMotion {
            family,
            translation,
            f0,
            id: id.to_string(),
        })
    }

    /// Motion hitting a prescribed metric and metric rate at `t = 0`.
    ///
    /// Given a target metric `gamma`, a symmetric variation `dgamma` and a
    /// reference metric `gamma0` (all in body-chart components), returns
    /// the path `p(t) = U exp(t A) p0` with `p0 = sqrt(gamma0) X`,
    /// `C = F0^{-T} gamma F0^{-1}`, `U = sqrt(C)` and `A = C^{-1} D`,
    /// `D = (1/2) F0^{-T} dgamma F0^{-1}`. Along it, `(p*q)(0) = gamma`
    /// and `(d/dt)(p*q)(0) = dgamma`.
    pub fn extension(gamma: &SpdTensor, dgamma: &Tensor2, gamma0: &SpdTensor) -> Result<Self> {
        if dgamma.variance() != Variance::CovCov {
            return Err(Error::VarianceMismatch(
                "metric variation must be CovCov".into(),
            ));
        }
        if !dgamma.is_symmetric(1e-12)? {
            return Err(Error::AsymmetricInput("metric variation must be symmetric".into()));
        }
        // reference placement: F0 = sqrt(gamma0) in the orthonormal spatial frame
        let f0 = spd::sym_matfn(&crate::tensor::sym(gamma0.components()), f64::sqrt);
        let f0_inv = f0.try_inverse().ok_or(Error::SingularF { det: f0.determinant() })?;
        let c = crate::tensor::sym(&(f0_inv.transpose() * gamma.components() * f0_inv));
        let d = crate::tensor::sym(&(f0_inv.transpose() * dgamma.components() * f0_inv)) * 0.5;
        let c_spd = SpdTensor::from_cov(Tensor2::new(c, Variance::CovCov, Frame::Spatial)?)?;
        let u = spd::sym_matfn(&c, f64::sqrt);
        let a = c_spd.inv_components() * d;
        let c_chol = spd::chol_lower(&c).map_err(Error::NonSpdInput)?;
        Ok(MotionPath::ClosedForm(ClosedFormMotion {
            family: Family::Extension { u, a, c_chol, f0 },
            translation: TranslationSpec::zero(),
            f0,
            id: "extension".to_string(),
        }))
    }

    pub fn sampled(s: SampledMotion) -> Self {
        MotionPath::Sampled(s)
    }

    /// Superposes a rigid path: `(g * p)(t, X) = g(t)(p(t, X))`.
    pub fn superpose_rigid(&self, g: &RigidPath) -> Self {
        MotionPath::Superposed { base: Box::new(self.clone()), overlay: g.clone().into() }
    }

    /// Superposes an affine path of space diffeomorphisms.
    pub fn superpose_affine(&self, g: &AffinePath) -> Self {
        MotionPath::Superposed { base: Box::new(self.clone()), overlay: g.clone() }
    }

    /// Tangent map of the reference placement (body charts are orthonormal
    /// against it). Superposition does not move the reference.
    pub fn reference(&self) -> Mat3 {
        match self {
            MotionPath::ClosedForm(m) => m.f0,
            MotionPath::Sampled(s) => s.f0,
            MotionPath::Superposed { base, .. } => base.reference(),
        }
    }

    /// `(F, F_t, c, c_t)` at time `t`.
    pub fn frame_at(&self, t: f64) -> Result<FrameMotion> {
        match self {
            MotionPath::ClosedForm(m) => {
                let (f, f_t) = m.family.at(t);
                let (c, c_t) = m.translation.at(t);
                Ok(FrameMotion { f, f_t, c, c_t })
            }
            MotionPath::Sampled(s) => s.at(t),
            MotionPath::Superposed { base, overlay } => {
                let b = base.frame_at(t)?;
                let (p, p_t, cg, cg_t) = overlay.at(t);
                Ok(FrameMotion {
                    f: p * b.f,
                    f_t: p_t * b.f + p * b.f_t,
                    c: p * b.c + cg,
                    c_t: p_t * b.c + p * b.c_t + cg_t,
                })
            }
        }
    }

    /// Placement of material point `x` at time `t`.
    pub fn position(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let fr = self.frame_at(t)?;
        Ok(fr.f * x + fr.c)
    }

    /// Lagrangian velocity of material point `x` at time `t`.
    pub fn lagrangian_velocity(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let fr = self.frame_at(t)?;
        Ok(fr.f_t * x + fr.c_t)
    }

    pub fn id(&self) -> String {
        match self {
            MotionPath::ClosedForm(m) => m.id.clone(),
            MotionPath::Sampled(s) => s.id.clone(),
            MotionPath::Superposed { base, overlay } => {
                format!("{}+{}", base.id(), overlay.id())
            }
        }
    }

    /// True when derivatives come from finite differences of samples.
    pub fn is_sampled(&self) -> bool {
        match self {
            MotionPath::ClosedForm(_) => false,
            MotionPath::Sampled(_) => true,
            MotionPath::Superposed { base, .. } => base.is_sampled(),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON motion specification
// ---------------------------------------------------------------------------

/// On-disk motion description. `points` and `mu` describe the discrete
/// body carried along the motion; `tgrid` is the default evaluation grid.
///
/// ```json
/// {
///   "family": "simple-shear",
///   "params": { "rate": 1.0 },
///   "points": [[0.0, 0.0, 0.0], [0.1, 0.2, 0.3]],
///   "mu": [1.0, 1.0],
///   "tgrid": { "t0": 0.0, "t1": 1.0, "n": 64 },
///   "reference": "auto"
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionSpec {
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default = "default_points")]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub tgrid: TimeGridSpec,
    /// `"auto"` (reference from the motion) or `"none"` (no reference
    /// configuration available; reference-dependent rates will fail).
    #[serde(default = "default_reference")]
    pub reference: String,
}

fn default_points() -> Vec<[f64; 3]> {
    vec![[0.0, 0.0, 0.0]]
}

fn default_reference() -> String {
    "auto".to_string()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeGridSpec {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        Self { t0: 0.0, t1: 1.0, n: 64 }
    }
}

/// Closed-form family selector for the JSON schema. Symmetric tensors use
/// Voigt order (11, 22, 33, 12, 13, 23).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum FamilySpec {
    Identity {},
    Rigid {
        axis: [f64; 3],
        #[serde(default)]
        phi0: f64,
        #[serde(default)]
        omega: f64,
        #[serde(default)]
        amp: f64,
        #[serde(default)]
        freq: f64,
    },
    Dilation { alpha: f64 },
    Uniaxial {
        alpha: f64,
        #[serde(default)]
        axis: usize,
    },
    SimpleShear { rate: f64 },
    RotStretch {
        axis: [f64; 3],
        omega: f64,
        alpha: f64,
        #[serde(default)]
        stretch_axis: usize,
    },
    Extension {
        gamma: [f64; 6],
        dgamma: [f64; 6],
        #[serde(default = "identity_voigt")]
        gamma0: [f64; 6],
    },
    Sampled {
        t0: f64,
        dt: f64,
        f: Vec<[f64; 9]>,
        #[serde(default)]
        c: Vec<[f64; 3]>,
    },
}

fn identity_voigt() -> [f64; 6] {
    [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
}

impl MotionSpec {
    pub fn build_motion(&self) -> Result<MotionPath> {
        self.family.build()
    }

    pub fn has_reference(&self) -> bool {
        self.reference != "none"
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<MotionPath> {
        Ok(match self {
            FamilySpec::Identity {} => {
                MotionPath::rigid(RotationSpec::identity(), TranslationSpec::zero())
            }
            FamilySpec::Rigid { axis, phi0, omega, amp, freq } => {
                let ax = Vec3::new(axis[0], axis[1], axis[2]);
                if ax.norm() < 1e-12 {
                    return Err(Error::Config("rigid family: axis must be nonzero".into()));
                }
                MotionPath::rigid(
                    RotationSpec { axis: ax.normalize(), phi0: *phi0, omega: *omega, amp: *amp, freq: *freq },
                    TranslationSpec::zero(),
                )
            }
            FamilySpec::Dilation { alpha } => MotionPath::dilation(*alpha),
            FamilySpec::Uniaxial { alpha, axis } => MotionPath::uniaxial(*alpha, *axis),
            FamilySpec::SimpleShear { rate } => MotionPath::simple_shear(*rate),
            FamilySpec::RotStretch { axis, omega, alpha, stretch_axis } => {
                let ax = Vec3::new(axis[0], axis[1], axis[2]);
                if ax.norm() < 1e-12 {
                    return Err(Error::Config("rot-stretch family: axis must be nonzero".into()));
                }
                MotionPath::rot_stretch(RotationSpec::spin(ax, *omega), *alpha, *stretch_axis)
            }
            FamilySpec::Extension { gamma, dgamma, gamma0 } => {
                let g = SpdTensor::from_cov(Tensor2::new(
                    crate::tensor::voigt_to_sym(gamma),
                    Variance::CovCov,
                    Frame::Material,
                )?)?;
                let g0 = SpdTensor::from_cov(Tensor2::new(
                    crate::tensor::voigt_to_sym(gamma0),
                    Variance::CovCov,
                    Frame::Material,
                )?)?;
                let dg = Tensor2::new(
                    crate::tensor::voigt_to_sym(dgamma),
                    Variance::CovCov,
                    Frame::Material,
                )?;
                MotionPath::extension(&g, &dg, &g0)?
            }
            FamilySpec::Sampled { t0, dt, f, c } => {
                let fs = f.iter().map(|row| Mat3::from_row_slice(row)).collect();
                let cs = c.iter().map(|row| Vec3::new(row[0], row[1], row[2])).collect();
                MotionPath::sampled(SampledMotion::new("sampled", *t0, *dt, fs, cs)?)
            }
        })
    }
}

/// Spin tensor `Omega = Q_t Q^{-1}` of a rigid path at `t`; always skew.
pub fn rigid_spin(g: &RigidPath, t: f64) -> Mat3 {
    let (q, q_t, _, _) = g.at(t);
    skew(&(q_t * q.transpose()))
}
