//! Geometry of the space of metric tensors carried by the body.
//!
//! At each material point the space of metrics is the open cone of SPD
//! twice-covariant tensors; a discrete body turns pointwise formulas into
//! weighted sums. Two L2-type inner products are provided on tangent
//! fields: one weighted by the mass measure and one by the Riemannian
//! volume of the current metric. Each has an associated covariant
//! derivative `D_t e = de/dt + Gamma(gamma_t, e)`; the mass-measure one
//! has the closed-form curvature implemented here, together with
//! geodesics, the exponential/logarithm pair, the adjoint action of a
//! Christoffel operator on contravariant densities, and the
//! spherical/deviatoric product structure.
//!
//! Sign convention: the mass-measure (Rougee) connection is
//! `D_t e = de/dt - (1/2)(gamma_t gamma^{-1} e + e gamma^{-1} gamma_t)`.

use crate::error::{Error, Result};
use crate::spd::{self, SpdTensor};
use crate::tensor::{Frame, Mat3, Tensor2, Variance, Vec3};

/// A certified metric at one material point.
#[derive(Debug, Clone)]
pub struct MetPoint {
    pub gamma: SpdTensor,
}

impl MetPoint {
    pub fn new(gamma: SpdTensor) -> Result<Self> {
        if gamma.variance() != Variance::CovCov || gamma.frame() != Frame::Material {
            return Err(Error::VarianceMismatch(
                "a metric point must be CovCov and material".into(),
            ));
        }
        Ok(Self { gamma })
    }
}

/// A tangent vector to the space of metrics: symmetric covariant material.
#[derive(Debug, Clone)]
pub struct TangentMet {
    pub epsilon: Tensor2,
}

impl TangentMet {
    pub fn new(epsilon: Tensor2) -> Result<Self> {
        if epsilon.variance() != Variance::CovCov || epsilon.frame() != Frame::Material {
            return Err(Error::VarianceMismatch(
                "a tangent vector must be CovCov and material".into(),
            ));
        }
        if !epsilon.is_symmetric(1e-12)? {
            return Err(Error::AsymmetricInput("tangent vector must be symmetric".into()));
        }
        Ok(Self { epsilon })
    }
}

/// Which measure a contravariant density is paired against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    MassMeasure,
    RiemannVolume,
}

/// A cotangent element with density: symmetric contravariant material
/// tensor paired against tangent vectors through a weighted sum.
#[derive(Debug, Clone)]
pub struct CotangentDensity {
    pub theta: Tensor2,
    pub weight: WeightKind,
}

impl CotangentDensity {
    pub fn new(theta: Tensor2, weight: WeightKind) -> Result<Self> {
        if theta.variance() != Variance::ConCon || theta.frame() != Frame::Material {
            return Err(Error::VarianceMismatch(
                "a density must be ConCon and material".into(),
            ));
        }
        if !theta.is_symmetric(1e-12)? {
            return Err(Error::AsymmetricInput("density must be symmetric".into()));
        }
        Ok(Self { theta, weight })
    }
}

/// Finite set of material points with mass weights and reference metrics;
/// integrals over the body are weighted sums over the points.
#[derive(Debug, Clone)]
pub struct DiscreteBody {
    pub points: Vec<Vec3>,
    pub mu: Vec<f64>,
    pub gamma0: Vec<SpdTensor>,
}

impl DiscreteBody {
    pub fn new(points: Vec<Vec3>, mu: Vec<f64>, gamma0: Vec<SpdTensor>) -> Result<Self> {
        if points.len() != mu.len() || points.len() != gamma0.len() {
            return Err(Error::Config("body arrays must have equal lengths".into()));
        }
        if points.is_empty() {
            return Err(Error::Config("body must contain at least one point".into()));
        }
        if let Some(bad) = mu.iter().find(|&&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Config(format!("mass weights must be positive (got {bad})")));
        }
        Ok(Self { points, mu, gamma0 })
    }

    /// Body with one shared reference metric at every point.
    pub fn homogeneous(points: Vec<Vec3>, mu: Vec<f64>, gamma0: SpdTensor) -> Result<Self> {
        let g0 = vec![gamma0; points.len()];
        Self::new(points, mu, g0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn pointwise_tr(gamma: &SpdTensor, e1: &Mat3, e2: &Mat3) -> f64 {
    let gi = gamma.inv_components();
    (gi * e1 * gi * e2).trace()
}

fn check_field_lengths(body: &DiscreteBody, n: usize) -> Result<()> {
    if body.len() != n {
        return Err(Error::Config(format!(
            "field has {n} points but body has {}",
            body.len()
        )));
    }
    Ok(())
}

/// Mass-measure inner product of two tangent fields:
/// `sum_i tr(g^-1 e1 g^-1 e2)(X_i) mu_i`.
pub fn rougee_inner(
    body: &DiscreteBody,
    gamma: &[SpdTensor],
    e1: &[Tensor2],
    e2: &[Tensor2],
) -> Result<f64> {
    check_field_lengths(body, gamma.len())?;
    check_field_lengths(body, e1.len())?;
    check_field_lengths(body, e2.len())?;
    let mut acc = 0.0;
    for i in 0..body.len() {
        acc += pointwise_tr(&gamma[i], e1[i].components(), e2[i].components()) * body.mu[i];
    }
    Ok(acc)
}

/// Riemannian-volume inner product: the chart weight of the current
/// volume form at point `i` is `mu_i sqrt(det gamma / det gamma0)`.
pub fn ebin_inner(
    body: &DiscreteBody,
    gamma: &[SpdTensor],
    e1: &[Tensor2],
    e2: &[Tensor2],
) -> Result<f64> {
    check_field_lengths(body, gamma.len())?;
    check_field_lengths(body, e1.len())?;
    check_field_lengths(body, e2.len())?;
    let mut acc = 0.0;
    for i in 0..body.len() {
        let w = body.mu[i] * (gamma[i].determinant() / body.gamma0[i].determinant()).sqrt();
        acc += pointwise_tr(&gamma[i], e1[i].components(), e2[i].components()) * w;
    }
    Ok(acc)
}

/// Volume-manifold inner product on per-point scalars:
/// `(4/3) sum_i (w1_i / nu_i)(w2_i / nu_i) mu_i`.
pub fn vol_metric_inner(body: &DiscreteBody, nu: &[f64], w1: &[f64], w2: &[f64]) -> Result<f64> {
    check_field_lengths(body, nu.len())?;
    check_field_lengths(body, w1.len())?;
    check_field_lengths(body, w2.len())?;
    if let Some(bad) = nu.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Config(format!("volume densities must be positive (got {bad})")));
    }
    let mut acc = 0.0;
    for i in 0..body.len() {
        acc += (w1[i] / nu[i]) * (w2[i] / nu[i]) * body.mu[i];
    }
    Ok(acc * 4.0 / 3.0)
}

// ---------------------------------------------------------------------------
// Christoffel operators
// ---------------------------------------------------------------------------

/// Christoffel contribution of the mass-measure connection (matrix level).
pub(crate) fn rougee_christoffel_m(gamma_inv: &Mat3, gamma_t: &Mat3, eps: &Mat3) -> Mat3 {
    -(gamma_t * gamma_inv * eps + eps * gamma_inv * gamma_t) * 0.5
}

/// Christoffel contribution of the volume connection (matrix level).
pub(crate) fn ebin_christoffel_m(gamma: &Mat3, gamma_inv: &Mat3, gamma_t: &Mat3, eps: &Mat3) -> Mat3 {
    let a = gamma_t * gamma_inv * eps + eps * gamma_inv * gamma_t;
    let tr_te = (gamma_inv * gamma_t * gamma_inv * eps).trace();
    let tr_t = (gamma_inv * gamma_t).trace();
    let tr_e = (gamma_inv * eps).trace();
    -(a + gamma * (0.5 * tr_te) - gamma_t * (0.5 * tr_e) - eps * (0.5 * tr_t)) * 0.5
}

type GammaFn = Box<dyn Fn(&SpdTensor, &Mat3, &Mat3) -> Result<Mat3> + Send + Sync>;

/// A bilinear Christoffel operator `Gamma_gamma(gamma_t, e)` together with
/// its adjoint action on contravariant densities, defined by the pairing
/// `theta : Gamma(gamma_t, e) = Gamma*(gamma_t, theta) : e`.
///
/// The adjoint uses a closed form when the constructor supplies one and
/// otherwise falls back to contraction against the six-dimensional basis
/// of symmetric tensors.
pub struct ChristoffelOp {
    name: String,
    gamma_fn: GammaFn,
    adjoint_fn: Option<GammaFn>,
}

impl std::fmt::Debug for ChristoffelOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChristoffelOp")
            .field("name", &self.name)
            .field("closed_form_adjoint", &self.adjoint_fn.is_some())
            .finish()
    }
}

impl ChristoffelOp {
    pub fn new(name: impl Into<String>, gamma_fn: GammaFn) -> Self {
        Self { name: name.into(), gamma_fn, adjoint_fn: None }
    }

    pub fn with_adjoint(name: impl Into<String>, gamma_fn: GammaFn, adjoint_fn: GammaFn) -> Self {
        Self { name: name.into(), gamma_fn, adjoint_fn: Some(adjoint_fn) }
    }

    /// The vanishing operator (canonical derivative).
    pub fn zero() -> Self {
        Self::with_adjoint(
            "zero",
            Box::new(|_, _, _| Ok(Mat3::zeros())),
            Box::new(|_, _, _| Ok(Mat3::zeros())),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_closed_form_adjoint(&self) -> bool {
        self.adjoint_fn.is_some()
    }

    pub(crate) fn apply_m(&self, gamma: &SpdTensor, gamma_t: &Mat3, eps: &Mat3) -> Result<Mat3> {
        (self.gamma_fn)(gamma, gamma_t, eps)
    }

    pub(crate) fn adjoint_m(&self, gamma: &SpdTensor, gamma_t: &Mat3, theta: &Mat3) -> Result<Mat3> {
        match &self.adjoint_fn {
            Some(f) => f(gamma, gamma_t, theta),
            None => self.adjoint_by_basis_m(gamma, gamma_t, theta),
        }
    }

    /// Adjoint recovered by contracting against the symmetric basis;
    /// always available, used as the fallback and as an independent check
    /// of closed forms.
    pub(crate) fn adjoint_by_basis_m(&self, gamma: &SpdTensor, gamma_t: &Mat3, theta: &Mat3) -> Result<Mat3> {
        let mut out = Mat3::zeros();
        for (k, (i, j)) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            let mut e = Mat3::zeros();
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let img = self.apply_m(gamma, gamma_t, &e)?;
            // theta : Gamma(e) = sum theta^ab Gamma_ab
            let s = (theta.transpose() * img).trace();
            if k < 3 {
                out[(i, j)] = s;
            } else {
                out[(i, j)] = s * 0.5;
                out[(j, i)] = s * 0.5;
            }
        }
        Ok(out)
    }

    /// Typed application `Gamma_gamma(gamma_t, eps)`.
    pub fn apply(&self, gamma: &SpdTensor, gamma_t: &Tensor2, eps: &Tensor2) -> Result<Tensor2> {
        check_tangent_like(gamma_t, "metric rate")?;
        check_tangent_like(eps, "tangent argument")?;
        let out = self.apply_m(gamma, gamma_t.components(), eps.components())?;
        eps.clone().with_matrix_checked(out)
    }

    /// Typed adjoint `Gamma*_gamma(gamma_t, theta)` on a contravariant density.
    pub fn adjoint(&self, gamma: &SpdTensor, gamma_t: &Tensor2, theta: &Tensor2) -> Result<Tensor2> {
        check_tangent_like(gamma_t, "metric rate")?;
        if theta.variance() != Variance::ConCon {
            return Err(Error::VarianceMismatch(
                "adjoint argument must be contravariant".into(),
            ));
        }
        let out = self.adjoint_m(gamma, gamma_t.components(), theta.components())?;
        theta.clone().with_matrix_checked(out)
    }

    /// Mass-measure (Rougee) connection operator.
    pub fn rougee() -> Self {
        Self::with_adjoint(
            "rougee",
            Box::new(|g, gt, e| Ok(rougee_christoffel_m(&g.inv_components(), gt, e))),
            Box::new(|g, gt, th| {
                let gi = g.inv_components();
                Ok(-(th * gt * gi + gi * gt * th) * 0.5)
            }),
        )
    }

    /// Volume (Ebin) connection operator.
    pub fn ebin() -> Self {
        Self::with_adjoint(
            "ebin",
            Box::new(|g, gt, e| Ok(ebin_christoffel_m(g.components(), &g.inv_components(), gt, e))),
            Box::new(|g, gt, th| {
                let gi = g.inv_components();
                let gm = g.components();
                let pair_g = (th.transpose() * gm).trace();
                let pair_t = (th.transpose() * gt).trace();
                let tr_t = (gi * gt).trace();
                Ok(-(th * gt * gi + gi * gt * th) * 0.5 - gi * gt * gi * (0.25 * pair_g)
                    + th * (0.25 * tr_t)
                    + gi * (0.25 * pair_t))
            }),
        )
    }
}

impl Tensor2 {
    fn with_matrix_checked(self, m: Mat3) -> Result<Tensor2> {
        Tensor2::new(m, self.variance(), self.frame())
    }
}

fn check_tangent_like(t: &Tensor2, what: &str) -> Result<()> {
    if t.variance() != Variance::CovCov {
        return Err(Error::VarianceMismatch(format!("{what} must be CovCov")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Covariant derivatives
// ---------------------------------------------------------------------------

/// Covariant derivative of a tangent field along a metric path for the
/// mass-measure connection:
/// `D_t e = e_t - (1/2)(gamma_t gamma^{-1} e + e gamma^{-1} gamma_t)`.
pub fn cov_deriv_rougee(
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    eps: &Tensor2,
    eps_t: &Tensor2,
) -> Result<Tensor2> {
    check_tangent_like(gamma_t, "metric rate")?;
    check_tangent_like(eps, "tangent field")?;
    check_tangent_like(eps_t, "tangent field rate")?;
    let g = rougee_christoffel_m(&gamma.inv_components(), gamma_t.components(), eps.components());
    eps_t.clone().with_matrix_checked(eps_t.components() + g)
}

/// Covariant derivative for the volume connection (five-term formula).
pub fn cov_deriv_ebin(
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    eps: &Tensor2,
    eps_t: &Tensor2,
) -> Result<Tensor2> {
    check_tangent_like(gamma_t, "metric rate")?;
    check_tangent_like(eps, "tangent field")?;
    check_tangent_like(eps_t, "tangent field rate")?;
    let g = ebin_christoffel_m(
        gamma.components(),
        &gamma.inv_components(),
        gamma_t.components(),
        eps.components(),
    );
    eps_t.clone().with_matrix_checked(eps_t.components() + g)
}

/// Covariant derivative along a path for an arbitrary Christoffel operator.
pub fn cov_deriv(
    op: &ChristoffelOp,
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    eps: &Tensor2,
    eps_t: &Tensor2,
) -> Result<Tensor2> {
    let g = op.apply(gamma, gamma_t, eps)?;
    eps_t.try_add(&g)
}

/// Adjoint of a Christoffel operator on a contravariant density.
pub fn christoffel_adjoint(
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    theta: &Tensor2,
    op: &ChristoffelOp,
) -> Result<Tensor2> {
    op.adjoint(gamma, gamma_t, theta)
}

/// Dual covariant derivative on densities:
/// `D_t theta = theta_t - Gamma*(gamma_t, theta)`. Together with the
/// tangent-side derivative it satisfies the Leibniz pairing
/// `D_t theta : e + theta : D_t e = d/dt (theta : e)`.
pub fn dual_cov_deriv(
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    theta: &Tensor2,
    theta_t: &Tensor2,
    op: &ChristoffelOp,
) -> Result<Tensor2> {
    let adj = op.adjoint(gamma, gamma_t, theta)?;
    theta_t.try_sub(&adj)
}

/// Rewrites the dual derivative of a density from the mass measure to the
/// Riemannian volume: `Dbar_t s = D_t s + (1/2) tr(gamma^{-1} gamma_t) s`.
/// Pushed forward, the correction is the `(div u) sigma` term.
pub fn volume_variant(
    gamma: &SpdTensor,
    gamma_t: &Tensor2,
    sigma_body: &Tensor2,
    d_t_sigma: &Tensor2,
) -> Result<Tensor2> {
    check_tangent_like(gamma_t, "metric rate")?;
    if sigma_body.variance() != Variance::ConCon || d_t_sigma.variance() != Variance::ConCon {
        return Err(Error::VarianceMismatch("densities must be contravariant".into()));
    }
    let tr = (gamma.inv_components() * gamma_t.components()).trace();
    d_t_sigma.try_add(&sigma_body.scale(0.5 * tr))
}

// ---------------------------------------------------------------------------
// Geodesics, exponential, logarithm, curvature, product structure
// ---------------------------------------------------------------------------

/// Geodesic of the mass-measure connection:
/// `gamma(t) = gamma_0 exp(t gamma_0^{-1} e_0)`.
pub fn geodesic(gamma0: &SpdTensor, eps0: &Tensor2, t: f64) -> Result<MetPoint> {
    check_tangent_like(eps0, "initial velocity")?;
    let mixed = Tensor2::new(
        gamma0.inv_components() * eps0.components() * t,
        Variance::UpDown,
        Frame::Material,
    )?;
    let e = spd::sym_exp(&mixed, gamma0).map_err(|err| match err {
        Error::AsymmetricInput(m) => Error::NonSpdInput(m),
        other => other,
    })?;
    let g = gamma0.components() * e.components();
    MetPoint::new(SpdTensor::from_cov(Tensor2::new(
        crate::tensor::sym(&g),
        Variance::CovCov,
        Frame::Material,
    )?)?)
}

/// Riemannian exponential: time one of the geodesic flow.
pub fn exp_map(gamma0: &SpdTensor, eps: &Tensor2) -> Result<MetPoint> {
    geodesic(gamma0, eps, 1.0)
}

/// Riemannian logarithm, inverse of [`exp_map`]:
/// `Log_{gamma_0}(gamma) = gamma_0 log(gamma_0^{-1} gamma)`.
///
/// The metric ratio is symmetrized in the whitened frame before taking the
/// logarithm; asymmetry beyond 1e-13 (relative) rejects the input.
pub fn log_map(gamma0: &SpdTensor, gamma: &SpdTensor) -> Result<TangentMet> {
    let l = spd::chol_lower(gamma0.components()).map_err(Error::NonSpdMetric)?;
    let ratio = gamma0.inv_components() * gamma.components();
    let w = spd::whiten(&l, &ratio);
    let asym = (w - w.transpose()).norm();
    if asym > 1e-13 * (1.0 + w.norm()) {
        return Err(Error::NonSpdInput(format!(
            "metric ratio not symmetric in the whitened frame (asymmetry {asym:.3e})"
        )));
    }
    let ws = crate::tensor::sym(&w);
    let eig = ws.symmetric_eigenvalues();
    if !(eig.min() > 0.0) {
        return Err(Error::NonSpdInput("metric ratio has non-positive spectrum".into()));
    }
    let logm = spd::unwhiten(&l, &spd::sym_matfn(&ws, f64::ln));
    let eps = gamma0.components() * logm;
    TangentMet::new(Tensor2::new(
        crate::tensor::sym(&eps),
        Variance::CovCov,
        Frame::Material,
    )?)
}

/// Curvature of the mass-measure connection evaluated on two directions
/// and a tangent argument:
/// `R(a_s, a_t) e = (1/4) gamma [[gamma^{-1} a_t, gamma^{-1} a_s], gamma^{-1} e]`,
/// antisymmetric in `(a_s, a_t)`.
pub fn curvature_rougee(
    gamma: &SpdTensor,
    eps_s: &Tensor2,
    eps_t: &Tensor2,
    eps: &Tensor2,
) -> Result<Tensor2> {
    check_tangent_like(eps_s, "first direction")?;
    check_tangent_like(eps_t, "second direction")?;
    check_tangent_like(eps, "tangent argument")?;
    let gi = gamma.inv_components();
    let at = gi * eps_t.components();
    let as_ = gi * eps_s.components();
    let ae = gi * eps.components();
    let comm = |x: &Mat3, y: &Mat3| x * y - y * x;
    let inner = comm(&at, &as_);
    let r = gamma.components() * comm(&inner, &ae) * 0.25;
    eps.clone().with_matrix_checked(r)
}

/// Splits a tangent vector into its spherical part (a multiple of `gamma`)
/// and its `gamma`-traceless deviatoric part; the two are orthogonal for
/// both inner products.
pub fn product_split(gamma: &SpdTensor, eps: &Tensor2) -> Result<(TangentMet, TangentMet)> {
    check_tangent_like(eps, "tangent argument")?;
    let tr = (gamma.inv_components() * eps.components()).trace();
    let spherical = gamma.components() * (tr / 3.0);
    let deviatoric = eps.components() - spherical;
    Ok((
        TangentMet::new(Tensor2::new(spherical, Variance::CovCov, Frame::Material)?)?,
        TangentMet::new(Tensor2::new(deviatoric, Variance::CovCov, Frame::Material)?)?,
    ))
}

/// Volumetric re-scaling of an isochoric metric:
/// `Psi(nu_ratio, gamma) = nu_ratio^{2/3} gamma` for a positive per-point
/// ratio of volume forms.
pub fn psi_mu(nu_ratio: f64, gamma_iso: &SpdTensor) -> Result<MetPoint> {
    if !(nu_ratio > 0.0) || !nu_ratio.is_finite() {
        return Err(Error::Config(format!("volume ratio must be positive (got {nu_ratio})")));
    }
    MetPoint::new(gamma_iso.scale(nu_ratio.powf(2.0 / 3.0))?)
}
