//! Registry of objective tensor rates.
//!
//! Each rate is exposed in three forms that agree exactly:
//! a spatial formula on contravariant fields ([`spatial_rate_con`]),
//! a spatial formula on covariant fields ([`spatial_rate_cov`]), and the
//! covariant-derivative form on body metrics ([`christoffel_of`] plus
//! [`rate_via_met`], which pulls the field back, applies
//! `d/dt + Gamma` or its dual, and pushes forward again).
//!
//! Particle derivatives (`tau_dot`, `k_dot`) are supplied by the caller:
//! the registry is a pointwise algebra layer, and for spatially
//! homogeneous fields the particle derivative is the plain time
//! derivative. Time differencing belongs to the drivers in `simulate`
//! and `verify`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kinematics::MotionState;
use crate::met::{self, ChristoffelOp};
use crate::spd::{self, SpdTensor};
use crate::tensor::{skew, Frame, Mat3, Tensor2, Variance};

/// Spin-function presets for the co-rotational family of
/// Xiao, Bruhns and Meyers. The three coefficients are functions of the
/// basic invariants `(tr b, tr b^2, tr b^3)` of the mixed left
/// Cauchy-Green tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XbmPreset {
    /// All coefficients zero: the spin reduces to the vorticity and the
    /// rate coincides with the Zaremba-Jaumann rate.
    Zero,
    /// A smooth nonzero demonstration preset,
    /// `nu = (1/(1+I1), -1/(2+I2), 1/(6+I3))`. This is *not* the
    /// logarithmic spin from the literature; it exercises all three
    /// generator terms while staying bounded on SPD arguments.
    LogSpinLike,
}

impl XbmPreset {
    pub fn nu(&self, i1: f64, i2: f64, i3: f64) -> (f64, f64, f64) {
        match self {
            XbmPreset::Zero => (0.0, 0.0, 0.0),
            XbmPreset::LogSpinLike => (1.0 / (1.0 + i1), -1.0 / (2.0 + i2), 1.0 / (6.0 + i3)),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            XbmPreset::Zero => "zero",
            XbmPreset::LogSpinLike => "logspin",
        }
    }
}

/// One objective rate family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateKind {
    Oldroyd,
    Truesdell,
    ZarembaJaumann,
    /// Two-parameter family `tau_dot - A tau - tau A*` with
    /// `A = w + m1 d + m2 tr(d) I`; contains Zaremba-Jaumann (0, 0),
    /// Oldroyd (1, 0) and Truesdell (1, -1/2).
    Hill { m1: f64, m2: f64 },
    /// Rate induced by the volume-weighted connection.
    Fiala,
    /// Volume variant of the Fiala rate (density trick applied to it).
    FialaTruesdell,
    /// The four basic rates from the Marsden-Hughes catalog (1-4).
    MarsdenHughes { which: u8 },
    /// Co-rotational rate spun by the rotation of the polar decomposition
    /// relative to a reference configuration.
    GreenNaghdi,
    /// General co-rotational family with invariant-weighted spin terms.
    Xbm { preset: XbmPreset },
}

impl RateKind {
    /// True for rates defined relative to a reference configuration.
    pub fn needs_reference(&self) -> bool {
        matches!(self, RateKind::GreenNaghdi | RateKind::Xbm { .. })
    }

    /// True when the rate equals the Oldroyd rate for all states.
    pub fn is_oldroyd_alias(&self) -> bool {
        match self {
            RateKind::Oldroyd => true,
            RateKind::Hill { m1, m2 } => *m1 == 1.0 && *m2 == 0.0,
            RateKind::MarsdenHughes { which } => *which == 1,
            _ => false,
        }
    }

    /// The default catalog used by the verification matrix: one member
    /// per distinct shipped rate.
    pub fn shipped() -> Vec<RateKind> {
        vec![
            RateKind::Oldroyd,
            RateKind::Truesdell,
            RateKind::ZarembaJaumann,
            RateKind::Hill { m1: 2.0, m2: 0.3 },
            RateKind::Fiala,
            RateKind::FialaTruesdell,
            RateKind::MarsdenHughes { which: 3 },
            RateKind::GreenNaghdi,
            RateKind::Xbm { preset: XbmPreset::Zero },
            RateKind::Xbm { preset: XbmPreset::LogSpinLike },
        ]
    }

    fn validate(&self) -> Result<()> {
        match self {
            RateKind::MarsdenHughes { which } if !(1..=4).contains(which) => Err(Error::Config(
                format!("marsden-hughes index must be 1..4, got {which}"),
            )),
            RateKind::Hill { m1, m2 } if !m1.is_finite() || !m2.is_finite() => {
                Err(Error::Config("hill parameters must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateKind::Oldroyd => write!(f, "oldroyd"),
            RateKind::Truesdell => write!(f, "truesdell"),
            RateKind::ZarembaJaumann => write!(f, "jaumann"),
            RateKind::Hill { m1, m2 } => write!(f, "hill:{m1},{m2}"),
            RateKind::Fiala => write!(f, "fiala"),
            RateKind::FialaTruesdell => write!(f, "fiala-truesdell"),
            RateKind::MarsdenHughes { which } => write!(f, "mh:{which}"),
            RateKind::GreenNaghdi => write!(f, "green-naghdi"),
            RateKind::Xbm { preset } => write!(f, "xbm:{}", preset.label()),
        }
    }
}

impl FromStr for RateKind {
    type Err = Error;

    /// Parses the config grammar: `oldroyd`, `truesdell`, `jaumann`,
    /// `hill:m1,m2`, `fiala`, `fiala-truesdell`, `mh:1..4`,
    /// `green-naghdi`, `xbm:preset`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s {
            "oldroyd" => RateKind::Oldroyd,
            "truesdell" => RateKind::Truesdell,
            "jaumann" | "zaremba-jaumann" => RateKind::ZarembaJaumann,
            "fiala" => RateKind::Fiala,
            "fiala-truesdell" => RateKind::FialaTruesdell,
            "green-naghdi" => RateKind::GreenNaghdi,
            _ => {
                if let Some(args) = s.strip_prefix("hill:") {
                    let parts: Vec<&str> = args.split(',').collect();
                    if parts.len() != 2 {
                        return Err(Error::Config(format!("bad hill spec '{s}', expected hill:m1,m2")));
                    }
                    let m1 = parts[0].trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("bad hill parameter '{}'", parts[0]))
                    })?;
                    let m2 = parts[1].trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("bad hill parameter '{}'", parts[1]))
                    })?;
                    RateKind::Hill { m1, m2 }
                } else if let Some(arg) = s.strip_prefix("mh:") {
                    let which = arg.trim().parse::<u8>().map_err(|_| {
                        Error::Config(format!("bad marsden-hughes index '{arg}'"))
                    })?;
                    RateKind::MarsdenHughes { which }
                } else if let Some(arg) = s.strip_prefix("xbm:") {
                    let preset = match arg.trim() {
                        "zero" => XbmPreset::Zero,
                        "logspin" | "log-spin-like" => XbmPreset::LogSpinLike,
                        other => {
                            return Err(Error::Config(format!("unknown xbm preset '{other}'")))
                        }
                    };
                    RateKind::Xbm { preset }
                } else {
                    return Err(Error::Config(format!("unknown rate '{s}'")));
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Kinematic state plus the (optional) reference metric that
/// reference-dependent rates act against.
#[derive(Debug, Clone)]
pub struct RateContext {
    pub state: MotionState,
    pub gamma0: Option<SpdTensor>,
}

impl RateContext {
    /// Context with the reference taken from the motion's own reference
    /// placement (the consistent choice for all shipped motions).
    pub fn new(state: MotionState) -> Self {
        let gamma0 = Some(state.gamma0.clone());
        Self { state, gamma0 }
    }

    /// Context with no reference configuration; reference-dependent rates
    /// report `MissingReference`.
    pub fn without_reference(state: MotionState) -> Self {
        Self { state, gamma0: None }
    }

    fn reference(&self) -> Result<&SpdTensor> {
        self.gamma0.as_ref().ok_or(Error::MissingReference)
    }
}

fn check_field(t: &Tensor2, t_dot: &Tensor2, variance: Variance) -> Result<()> {
    if t.variance() != variance || t.frame() != Frame::Spatial {
        return Err(Error::VarianceMismatch(format!(
            "rate input must be {variance:?} and spatial, got {:?} {:?}",
            t.variance(),
            t.frame()
        )));
    }
    if t_dot.variance() != variance || t_dot.frame() != Frame::Spatial {
        return Err(Error::VarianceMismatch(
            "particle derivative must carry the tags of the field".into(),
        ));
    }
    if !t.is_symmetric(1e-10)? {
        return Err(Error::AsymmetricInput("rate input must be symmetric".into()));
    }
    Ok(())
}

/// Spin of the co-rotational frame of the polar rotation relative to the
/// reference: `omega = grad_u - push_forward(U0^{-1} U0_t)`, where
/// `U0 = sqrt(gamma0^{-1} gamma)` in the reference metric and `U0_t`
/// solves `U0 U0_t + U0_t U0 = gamma0^{-1} gamma_t`. This equals
/// `R_t R^{-1}` for the polar factor of the relative deformation without
/// differentiating the decomposition itself.
fn green_naghdi_spin(ctx: &RateContext) -> Result<Mat3> {
    let gamma0 = ctx.reference()?;
    let s = &ctx.state;
    let g0i = gamma0.inv_components();
    let ratio = Tensor2::new(g0i * s.gamma.components(), Variance::UpDown, Frame::Material)?;
    let u0 = spd::spd_sqrt(&SpdTensor::from_mixed(ratio, gamma0)?);
    let rhs = Tensor2::new(g0i * s.gamma_t.components(), Variance::UpDown, Frame::Material)?;
    let u0_t = spd::sylvester_spd_solve(&u0, &rhs)?;
    let m = u0
        .components()
        .try_inverse()
        .ok_or_else(|| Error::NonSpdInput("relative stretch not invertible".into()))?
        * u0_t.components();
    let f = s.f;
    let f_inv = f.try_inverse().ok_or(Error::SingularF { det: f.determinant() })?;
    Ok(s.grad_u.components() - f * m * f_inv)
}

/// Invariant-weighted spin generator
/// `nu1 (b d)^a + nu2 (b^2 d)^a + nu3 (b d b^2)^a` on mixed spatial tensors.
fn upsilon_hat(preset: XbmPreset, b_hat: &Mat3, d_hat: &Mat3) -> Mat3 {
    let i1 = b_hat.trace();
    let b2 = b_hat * b_hat;
    let i2 = b2.trace();
    let i3 = (b2 * b_hat).trace();
    let (n1, n2, n3) = preset.nu(i1, i2, i3);
    skew(&(b_hat * d_hat)) * n1 + skew(&(b2 * d_hat)) * n2 + skew(&(b_hat * d_hat * b2)) * n3
}

/// The same generator assembled on the body from metric data alone:
/// `G = gamma0^{-1} gamma`, `D = (1/2) gamma^{-1} gamma_t`, with the skew
/// part taken with respect to `gamma`.
fn upsilon_met(preset: XbmPreset, gamma: &SpdTensor, gamma0: &SpdTensor, gamma_t: &Mat3) -> Mat3 {
    let gi = gamma.inv_components();
    let g_big = gamma0.inv_components() * gamma.components();
    let d_big = gi * gamma_t * 0.5;
    let i1 = g_big.trace();
    let g2 = g_big * g_big;
    let i2 = g2.trace();
    let i3 = (g2 * g_big).trace();
    let (n1, n2, n3) = preset.nu(i1, i2, i3);
    let skew_g = |m: &Mat3| (m - gi * m.transpose() * gamma.components()) * 0.5;
    skew_g(&(g_big * d_big)) * n1 + skew_g(&(g2 * d_big)) * n2 + skew_g(&(g_big * d_big * g2)) * n3
}

/// Generator matrix `A` for rates of the co-rotational/convective form
/// `tau_dot - A tau - tau A*`; `None` for rates with extra trace terms.
fn a_form(kind: &RateKind, ctx: &RateContext) -> Result<Option<Mat3>> {
    let s = &ctx.state;
    let l = s.grad_u.components();
    let dh = s.d_hat.components();
    let wh = s.w_hat.components();
    Ok(match kind {
        RateKind::Oldroyd => Some(*l),
        RateKind::Truesdell => Some(l - Mat3::identity() * (0.5 * dh.trace())),
        RateKind::ZarembaJaumann => Some(*wh),
        RateKind::Hill { m1, m2 } => {
            Some(wh + dh * *m1 + Mat3::identity() * (*m2 * dh.trace()))
        }
        RateKind::MarsdenHughes { which } => match which {
            1 => Some(*l),
            2 => Some(*wh),
            3 => Some(-l.transpose()),
            4 => Some(l - Mat3::identity() * (0.5 * dh.trace())),
            _ => return Err(Error::Config(format!("marsden-hughes index {which} out of range"))),
        },
        RateKind::GreenNaghdi => Some(green_naghdi_spin(ctx)?),
        RateKind::Xbm { preset } => {
            ctx.reference()?;
            Some(wh + upsilon_hat(*preset, s.b_hat.components(), dh))
        }
        RateKind::Fiala | RateKind::FialaTruesdell => None,
    })
}

/// Objective rate of a symmetric contravariant spatial field.
pub fn spatial_rate_con(
    kind: &RateKind,
    ctx: &RateContext,
    tau: &Tensor2,
    tau_dot: &Tensor2,
) -> Result<Tensor2> {
    kind.validate()?;
    check_field(tau, tau_dot, Variance::ConCon)?;
    let s = &ctx.state;
    let t = tau.components();
    let td = tau_dot.components();
    let out = match a_form(kind, ctx)? {
        Some(a) => td - a * t - t * a.transpose(),
        None => {
            let dh = s.d_hat.components();
            let wh = s.w_hat.components();
            let base = td - wh * t - t * wh.transpose();
            // trace corrections of the volume-weighted rate; the second
            // variant flips the sign of the tr(d) term
            let tr_tau = t.trace();
            let tr_d = dh.trace();
            let pair = (t.transpose() * dh).trace();
            let sign = if matches!(kind, RateKind::FialaTruesdell) { 1.0 } else { -1.0 };
            base + (dh * tr_tau + t * (sign * tr_d) - Mat3::identity() * pair) * 0.5
        }
    };
    Ok(tau.with_matrix(out))
}

/// Objective rate of a symmetric covariant spatial field; the twin of
/// [`spatial_rate_con`] under the duality pairing.
pub fn spatial_rate_cov(
    kind: &RateKind,
    ctx: &RateContext,
    k: &Tensor2,
    k_dot: &Tensor2,
) -> Result<Tensor2> {
    kind.validate()?;
    check_field(k, k_dot, Variance::CovCov)?;
    let s = &ctx.state;
    let m = k.components();
    let md = k_dot.components();
    let out = match a_form(kind, ctx)? {
        Some(a) => md + a.transpose() * m + m * a,
        None => {
            let dh = s.d_hat.components();
            let wh = s.w_hat.components();
            let base = md + m * wh + wh.transpose() * m;
            let tr_k = m.trace();
            let tr_d = dh.trace();
            let pair = (dh.transpose() * m).trace();
            let sign = if matches!(kind, RateKind::FialaTruesdell) { -1.0 } else { 1.0 };
            base + (m * (sign * tr_d) + dh * tr_k - Mat3::identity() * pair) * 0.5
        }
    };
    Ok(k.with_matrix(out))
}

/// Christoffel operator `Gamma` on body metrics associated with a rate;
/// `gamma0` is required by the reference-dependent kinds.
pub fn christoffel_of(kind: &RateKind, gamma0: Option<&SpdTensor>) -> Result<ChristoffelOp> {
    kind.validate()?;
    let scaled = |name: &str, alpha: f64, beta: f64| {
        ChristoffelOp::with_adjoint(
            name,
            Box::new(move |g: &SpdTensor, gt: &Mat3, e: &Mat3| {
                let gi = g.inv_components();
                Ok((gt * gi * e + e * gi * gt) * alpha + e * (beta * (gi * gt).trace()))
            }),
            Box::new(move |g: &SpdTensor, gt: &Mat3, th: &Mat3| {
                let gi = g.inv_components();
                Ok((th * gt * gi + gi * gt * th) * alpha + th * (beta * (gi * gt).trace()))
            }),
        )
    };
    Ok(match kind {
        RateKind::Oldroyd => ChristoffelOp::zero(),
        RateKind::Truesdell => scaled("truesdell", 0.0, -0.5),
        RateKind::ZarembaJaumann => ChristoffelOp::rougee(),
        RateKind::Hill { m1, m2 } => scaled("hill", 0.5 * (m1 - 1.0), *m2),
        RateKind::MarsdenHughes { which } => match which {
            1 => ChristoffelOp::zero(),
            2 => ChristoffelOp::rougee(),
            3 => scaled("mh3", -1.0, 0.0),
            4 => scaled("mh4", 0.0, -0.5),
            _ => unreachable!("validated above"),
        },
        RateKind::Fiala => ChristoffelOp::ebin(),
        RateKind::FialaTruesdell => ChristoffelOp::with_adjoint(
            "fiala-truesdell",
            Box::new(|g: &SpdTensor, gt: &Mat3, e: &Mat3| {
                let gi = g.inv_components();
                Ok(met::ebin_christoffel_m(g.components(), &gi, gt, e)
                    - e * (0.5 * (gi * gt).trace()))
            }),
            Box::new(|g: &SpdTensor, gt: &Mat3, th: &Mat3| {
                let gi = g.inv_components();
                let gm = g.components();
                let pair_g = (th.transpose() * gm).trace();
                let pair_t = (th.transpose() * gt).trace();
                let tr_t = (gi * gt).trace();
                Ok(-(th * gt * gi + gi * gt * th) * 0.5 - gi * gt * gi * (0.25 * pair_g)
                    + th * (0.25 * tr_t)
                    + gi * (0.25 * pair_t)
                    - th * (0.5 * tr_t))
            }),
        ),
        RateKind::GreenNaghdi => {
            let g0 = gamma0.ok_or(Error::MissingReference)?.clone();
            let g0_adj = g0.clone();
            let spin = move |g0: &SpdTensor, g: &SpdTensor, gt: &Mat3| -> Result<Mat3> {
                let g0i = g0.inv_components();
                let ratio =
                    Tensor2::new(g0i * g.components(), Variance::UpDown, Frame::Material)?;
                let u0 = spd::spd_sqrt(&SpdTensor::from_mixed(ratio, g0)?);
                let rhs = Tensor2::new(g0i * gt, Variance::UpDown, Frame::Material)?;
                let u0_t = spd::sylvester_spd_solve(&u0, &rhs)?;
                Ok(u0
                    .components()
                    .try_inverse()
                    .ok_or_else(|| Error::NonSpdInput("relative stretch not invertible".into()))?
                    * u0_t.components())
            };
            let spin_adj = spin.clone();
            ChristoffelOp::with_adjoint(
                "green-naghdi",
                Box::new(move |g: &SpdTensor, gt: &Mat3, e: &Mat3| {
                    let m = spin(&g0, g, gt)?;
                    Ok(-(e * m) - m.transpose() * e)
                }),
                Box::new(move |g: &SpdTensor, gt: &Mat3, th: &Mat3| {
                    let m = spin_adj(&g0_adj, g, gt)?;
                    Ok(-(th * m.transpose()) - m * th)
                }),
            )
        }
        RateKind::Xbm { preset } => {
            let g0 = gamma0.ok_or(Error::MissingReference)?.clone();
            let g0_adj = g0.clone();
            let preset = *preset;
            ChristoffelOp::with_adjoint(
                "xbm",
                Box::new(move |g: &SpdTensor, gt: &Mat3, e: &Mat3| {
                    let gi = g.inv_components();
                    let l = upsilon_met(preset, g, &g0, gt);
                    Ok(met::rougee_christoffel_m(&gi, gt, e) + e * l + l.transpose() * e)
                }),
                Box::new(move |g: &SpdTensor, gt: &Mat3, th: &Mat3| {
                    let gi = g.inv_components();
                    let l = upsilon_met(preset, g, &g0_adj, gt);
                    Ok(-(th * gt * gi + gi * gt * th) * 0.5 + th * l.transpose() + l * th)
                }),
            )
        }
    })
}

/// Computes a rate through the body: pull the field back, apply the
/// covariant derivative (or its dual on contravariant fields), and push
/// the result forward. Must agree with the spatial forms.
pub fn rate_via_met(
    kind: &RateKind,
    ctx: &RateContext,
    field: &Tensor2,
    field_dot: &Tensor2,
) -> Result<Tensor2> {
    kind.validate()?;
    let op = christoffel_of(kind, ctx.gamma0.as_ref())?;
    let s = &ctx.state;
    let f = s.f;
    let f_t = s.f_t;
    let f_inv = f.try_inverse().ok_or(Error::SingularF { det: f.determinant() })?;
    let gamma = &s.gamma;
    let gamma_t = s.gamma_t.components();

    match field.variance() {
        Variance::CovCov => {
            check_field(field, field_dot, Variance::CovCov)?;
            let k = field.components();
            let k_dot = field_dot.components();
            let eps = f.transpose() * k * f;
            let eps_t = f_t.transpose() * k * f + f.transpose() * k_dot * f
                + f.transpose() * k * f_t;
            let d = eps_t + op.apply_m(gamma, gamma_t, &eps)?;
            Ok(field.with_matrix(f_inv.transpose() * d * f_inv))
        }
        Variance::ConCon => {
            check_field(field, field_dot, Variance::ConCon)?;
            let tau = field.components();
            let tau_dot = field_dot.components();
            let fi_t = f_inv.transpose();
            let theta = f_inv * tau * fi_t;
            // d/dt(F^{-1}) = -F^{-1} F_t F^{-1}
            let dfi = -f_inv * f_t * f_inv;
            let theta_t = dfi * tau * fi_t + f_inv * tau_dot * fi_t
                + f_inv * tau * dfi.transpose();
            let d = theta_t - op.adjoint_m(gamma, gamma_t, &theta)?;
            Ok(field.with_matrix(f * d * f.transpose()))
        }
        v => Err(Error::VarianceMismatch(format!(
            "rates are defined on CovCov and ConCon fields, got {v:?}"
        ))),
    }
}
