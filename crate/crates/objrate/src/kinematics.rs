//! Per-point kinematics of a motion: deformation measures, pull-back and
//! push-forward of tensor fields, Lie derivatives, stresses and densities.
//!
//! The engine is pointwise: motions are spatially affine, so the velocity
//! gradient is homogeneous and a tensor field along the motion is
//! represented by its value and caller-supplied particle derivative at the
//! tracked point. Spatial coordinates are orthonormal (the Euclidean
//! metric has identity components) and body charts are orthonormal at the
//! reference placement.

use crate::error::{Error, Result};
use crate::motion::MotionPath;
use crate::spd::SpdTensor;
use crate::tensor::{skew, sym, Frame, Mat3, Tensor2, Variance, Vec3};

/// Kinematic snapshot of one material point at one time.
///
/// `f` and `f_t` are two-point tangent maps (body chart to space); all
/// derived tensors carry variance and frame tags. `gamma = F^T q F` is the
/// metric pulled back onto the body, `gamma_t` its time derivative, and
/// `gamma0` the reference metric from the motion's reference placement.
#[derive(Debug, Clone)]
pub struct MotionState {
    pub t: f64,
    pub x: Vec3,
    pub f: Mat3,
    pub f_t: Mat3,
    pub f0: Mat3,
    /// Spatial velocity gradient `F_t F^{-1}` (mixed, spatial).
    pub grad_u: Tensor2,
    /// Stretch rate: symmetric part of `grad_u`.
    pub d_hat: Tensor2,
    /// Spin: skew part of `grad_u`.
    pub w_hat: Tensor2,
    /// Covariant strain rate `d = q d_hat`.
    pub d: Tensor2,
    /// Right Cauchy-Green tensor on the reference configuration.
    pub c_right: Tensor2,
    /// Left Cauchy-Green tensor (contravariant, spatial).
    pub b_left: Tensor2,
    /// Mixed left Cauchy-Green tensor `b q`.
    pub b_hat: Tensor2,
    pub gamma: SpdTensor,
    pub gamma_t: Tensor2,
    pub gamma0: SpdTensor,
    /// Volume ratio `det F`.
    pub j: f64,
    /// Mass density `mu_density / det F`.
    pub rho: f64,
    pub mu_density: f64,
}

/// Evaluates the kinematic state with unit reference mass density.
pub fn motion_state(m: &MotionPath, x: &Vec3, t: f64) -> Result<MotionState> {
    motion_state_with_density(m, x, t, 1.0)
}

/// Evaluates the kinematic state; `mu_density` is mass per unit body-chart
/// volume at the tracked point.
pub fn motion_state_with_density(
    m: &MotionPath,
    x: &Vec3,
    t: f64,
    mu_density: f64,
) -> Result<MotionState> {
    if mu_density <= 0.0 || !mu_density.is_finite() {
        return Err(Error::ZeroDensity(mu_density));
    }
    let fr = m.frame_at(t)?;
    let (f, f_t) = (fr.f, fr.f_t);
    let j = f.determinant();
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::SingularF { det: j });
    }
    let f_inv = f.try_inverse().ok_or(Error::SingularF { det: j })?;
    let f0 = m.reference();
    let f0_inv = f0
        .try_inverse()
        .ok_or(Error::SingularF { det: f0.determinant() })?;

    let l = f_t * f_inv;
    let d_hat_m = sym(&l);
    let w_hat_m = skew(&l);

    let gamma_m = f.transpose() * f;
    let gamma_t_m = f_t.transpose() * f + f.transpose() * f_t;
    let gamma0_m = f0.transpose() * f0;

    let f_phi = f * f0_inv;
    let c_m = f_phi.transpose() * f_phi;
    let b_m = f_phi * f_phi.transpose();

    Ok(MotionState {
        t,
        x: *x,
        f,
        f_t,
        f0,
        grad_u: Tensor2::new(l, Variance::UpDown, Frame::Spatial)?,
        d_hat: Tensor2::new(d_hat_m, Variance::UpDown, Frame::Spatial)?,
        w_hat: Tensor2::new(w_hat_m, Variance::UpDown, Frame::Spatial)?,
        d: Tensor2::new(d_hat_m, Variance::CovCov, Frame::Spatial)?,
        c_right: Tensor2::new(c_m, Variance::CovCov, Frame::Spatial)?,
        b_left: Tensor2::new(b_m, Variance::ConCon, Frame::Spatial)?,
        b_hat: Tensor2::new(b_m, Variance::UpDown, Frame::Spatial)?,
        gamma: SpdTensor::from_cov(Tensor2::new(gamma_m, Variance::CovCov, Frame::Material)?)?,
        gamma_t: Tensor2::new(gamma_t_m, Variance::CovCov, Frame::Material)?,
        gamma0: SpdTensor::from_cov(Tensor2::new(gamma0_m, Variance::CovCov, Frame::Material)?)?,
        j,
        rho: mu_density / j,
        mu_density,
    })
}

impl MotionState {
    /// Pulls a spatial tensor back to the body through this state's `F`.
    pub fn pull_back(&self, t: &Tensor2) -> Result<Tensor2> {
        pull_back_with(&self.f, t)
    }

    /// Pushes a material tensor forward to space through this state's `F`.
    pub fn push_forward(&self, t: &Tensor2) -> Result<Tensor2> {
        push_forward_with(&self.f, t)
    }
}

/// Pull-back of a spatial second-order tensor through a tangent map `F`.
/// The componentwise formula is selected by the variance tag:
/// `F* k F` (CovCov), `F^{-1} tau F^{-*}` (ConCon), `F^{-1} t F` (UpDown),
/// `F* t F^{-*}` (DownUp).
pub fn pull_back_with(f: &Mat3, t: &Tensor2) -> Result<Tensor2> {
    if t.frame() != Frame::Spatial {
        return Err(Error::FrameMismatch("pull-back expects a spatial tensor".into()));
    }
    let f_inv = f
        .try_inverse()
        .filter(|_| f.determinant() > 0.0)
        .ok_or(Error::SingularF { det: f.determinant() })?;
    let m = t.components();
    let out = match t.variance() {
        Variance::CovCov => f.transpose() * m * f,
        Variance::ConCon => f_inv * m * f_inv.transpose(),
        Variance::UpDown => f_inv * m * f,
        Variance::DownUp => f.transpose() * m * f_inv.transpose(),
    };
    Ok(t.with_matrix(out).with_frame(Frame::Material))
}

/// Push-forward of a material second-order tensor through `F`
/// (the inverse of [`pull_back_with`]).
pub fn push_forward_with(f: &Mat3, t: &Tensor2) -> Result<Tensor2> {
    if t.frame() != Frame::Material {
        return Err(Error::FrameMismatch("push-forward expects a material tensor".into()));
    }
    let f_inv = f
        .try_inverse()
        .filter(|_| f.determinant() > 0.0)
        .ok_or(Error::SingularF { det: f.determinant() })?;
    let m = t.components();
    let out = match t.variance() {
        Variance::CovCov => f_inv.transpose() * m * f_inv,
        Variance::ConCon => f * m * f.transpose(),
        Variance::UpDown => f * m * f_inv,
        Variance::DownUp => f_inv.transpose() * m * f.transpose(),
    };
    Ok(t.with_matrix(out).with_frame(Frame::Spatial))
}

/// Pull-back / push-forward of vectors and covectors.
pub fn pull_back_vector(f: &Mat3, w: &Vec3) -> Result<Vec3> {
    let f_inv = f
        .try_inverse()
        .ok_or(Error::SingularF { det: f.determinant() })?;
    Ok(f_inv * w)
}

pub fn push_forward_vector(f: &Mat3, w: &Vec3) -> Vec3 {
    f * w
}

pub fn pull_back_covector(f: &Mat3, beta: &Vec3) -> Vec3 {
    f.transpose() * beta
}

pub fn push_forward_covector(f: &Mat3, alpha: &Vec3) -> Result<Vec3> {
    let f_inv = f
        .try_inverse()
        .ok_or(Error::SingularF { det: f.determinant() })?;
    Ok(f_inv.transpose() * alpha)
}

/// Lie derivative of a second-order tensor along a velocity field with
/// spatially constant gradient `grad_u`. The directional-derivative term
/// `transport` (the value of `grad_u . nabla` applied to the field) is
/// supplied by the caller and is zero for homogeneous fields.
///
/// The algebraic part is selected by variance:
/// CovCov `(L u)* k + k (L u)`, ConCon `-(L u) t - t (L u)*`,
/// UpDown `-(L u) t + t (L u)`, DownUp `(L u)* t - t (L u)*`.
pub fn lie_derivative(grad_u: &Tensor2, t: &Tensor2, transport: &Tensor2) -> Result<Tensor2> {
    if grad_u.variance() != Variance::UpDown {
        return Err(Error::VarianceMismatch(
            "velocity gradient must be a mixed UpDown tensor".into(),
        ));
    }
    if transport.variance() != t.variance() || transport.frame() != t.frame() {
        return Err(Error::VarianceMismatch(
            "transport term must carry the tags of the differentiated field".into(),
        ));
    }
    if grad_u.frame() != t.frame() {
        return Err(Error::FrameMismatch(
            "velocity gradient and field live in different frames".into(),
        ));
    }
    let l = grad_u.components();
    let m = t.components();
    let alg = match t.variance() {
        Variance::CovCov => l.transpose() * m + m * l,
        Variance::ConCon => -(l * m) - m * l.transpose(),
        Variance::UpDown => -(l * m) + m * l,
        Variance::DownUp => l.transpose() * m - m * l.transpose(),
    };
    Ok(t.with_matrix(transport.components() + alg))
}

/// Lie derivative of a vector field: `[u, w] = transport - (grad u) w`.
pub fn lie_derivative_vector(grad_u: &Tensor2, w: &Vec3, transport: &Vec3) -> Result<Vec3> {
    if grad_u.variance() != Variance::UpDown {
        return Err(Error::VarianceMismatch(
            "velocity gradient must be a mixed UpDown tensor".into(),
        ));
    }
    Ok(transport - grad_u.components() * w)
}

/// Lie derivative of a covector field: `transport + (grad u)* alpha`.
pub fn lie_derivative_covector(grad_u: &Tensor2, alpha: &Vec3, transport: &Vec3) -> Result<Vec3> {
    if grad_u.variance() != Variance::UpDown {
        return Err(Error::VarianceMismatch(
            "velocity gradient must be a mixed UpDown tensor".into(),
        ));
    }
    Ok(transport + grad_u.components().transpose() * alpha)
}

/// Logarithmic (true) strain on the body: `E = (1/2) gamma0 log(gamma0^{-1} gamma)`,
/// the pull-back of `(1/2) q ln(q^{-1} C)` through the reference placement.
pub fn hencky_strain(state: &MotionState, gamma0: &SpdTensor) -> Result<Tensor2> {
    let g0 = gamma0.components();
    let mixed = Tensor2::new(
        gamma0.inv_components() * state.gamma.components(),
        Variance::UpDown,
        Frame::Material,
    )?;
    let ratio = SpdTensor::from_mixed(mixed, gamma0)?;
    let log = crate::spd::sym_log(&ratio);
    Tensor2::new(g0 * log.components() * 0.5, Variance::CovCov, Frame::Material)
}

/// Stress measures associated with a Cauchy stress at one state.
#[derive(Debug, Clone)]
pub struct Stresses {
    /// Kirchhoff stress `tau = sigma / rho` (contravariant, spatial).
    pub tau: Tensor2,
    /// Intrinsic stress on the body: pull-back of `tau`.
    pub theta: Tensor2,
    /// Pull-back of the Cauchy stress itself.
    pub noll_sigma: Tensor2,
    /// Push-forward of `theta` to the reference configuration
    /// (second Piola-Kirchhoff).
    pub second_piola: Tensor2,
}

/// Derives the body-side stress measures from a spatial Cauchy stress.
pub fn stresses(state: &MotionState, sigma: &Tensor2) -> Result<Stresses> {
    if sigma.variance() != Variance::ConCon || sigma.frame() != Frame::Spatial {
        return Err(Error::VarianceMismatch(
            "Cauchy stress must be contravariant and spatial".into(),
        ));
    }
    if state.rho <= 0.0 {
        return Err(Error::ZeroDensity(state.rho));
    }
    let tau = sigma.scale(1.0 / state.rho);
    let theta = pull_back_with(&state.f, &tau)?;
    let noll_sigma = pull_back_with(&state.f, sigma)?;
    let second_piola = push_forward_with(&state.f0, &theta)?;
    Ok(Stresses { tau, theta, noll_sigma, second_piola })
}

/// Mass density `rho = mu_density / det F` in the body chart.
pub fn mass_density(state: &MotionState, mu_density: f64) -> Result<f64> {
    if mu_density <= 0.0 || !mu_density.is_finite() {
        return Err(Error::ZeroDensity(mu_density));
    }
    if !(state.j > 0.0) {
        return Err(Error::SingularF { det: state.j });
    }
    Ok(mu_density / state.j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{RigidPath, RotationSpec, TranslationSpec};
    use crate::testutil::{rand_invertible, rand_sym, rng};
    use proptest::prelude::*;

    fn spatial(m: Mat3, v: Variance) -> Tensor2 {
        Tensor2::new(m, v, Frame::Spatial).unwrap()
    }

    #[test]
    fn pull_back_with_identity_is_identity_on_every_variance() {
        let f = Mat3::identity();
        let mut r = rng(31);
        for v in [Variance::CovCov, Variance::ConCon, Variance::UpDown, Variance::DownUp] {
            let t = spatial(crate::testutil::rand_mat(&mut r, 1.0), v);
            let back = pull_back_with(&f, &t).unwrap();
            assert_eq!(back.components(), t.components());
            assert_eq!(back.frame(), Frame::Material);
        }
    }

    #[test]
    fn pull_back_of_q_under_doubling_scales_by_four() {
        let f = Mat3::identity() * 2.0;
        let gamma = pull_back_with(&f, &Tensor2::metric_q()).unwrap();
        assert!((gamma.components() - Mat3::identity() * 4.0).norm() < 1e-14);
    }

    #[test]
    fn contraction_is_invariant_under_pull_back() {
        let mut r = rng(32);
        for _ in 0..20 {
            let f = rand_invertible(&mut r);
            if f.determinant() <= 0.0 {
                continue;
            }
            let tau = spatial(rand_sym(&mut r, 1.0), Variance::ConCon);
            let k = spatial(rand_sym(&mut r, 1.0), Variance::CovCov);
            let scalar = tau.ddot(&k).unwrap();
            let pulled = pull_back_with(&f, &tau)
                .unwrap()
                .ddot(&pull_back_with(&f, &k).unwrap())
                .unwrap();
            assert!((scalar - pulled).abs() <= 1e-12 * (1.0 + scalar.abs()));
        }
    }

    #[test]
    fn lie_derivative_of_q_equals_twice_strain_rate() {
        let m = MotionPath::simple_shear(1.4);
        let s = motion_state(&m, &Vec3::zeros(), 0.6).unwrap();
        let zero = Tensor2::zeros(Variance::CovCov, Frame::Spatial);
        let lq = lie_derivative(&s.grad_u, &Tensor2::metric_q(), &zero).unwrap();
        assert!((lq.components() - s.d.components() * 2.0).norm() < 1e-14);
    }

    #[test]
    fn lie_derivative_reduces_to_transport_without_gradient() {
        let grad = Tensor2::zeros(Variance::UpDown, Frame::Spatial);
        let t = spatial(rand_sym(&mut rng(33), 1.0), Variance::ConCon);
        let tr = spatial(rand_sym(&mut rng(34), 1.0), Variance::ConCon);
        let l = lie_derivative(&grad, &t, &tr).unwrap();
        assert_eq!(l.components(), tr.components());
    }

    #[test]
    fn lie_derivative_satisfies_product_rule_against_flow_oracle() {
        // FD along the flow of a homogeneous velocity field: for constant
        // tensors, d/dt (phi* tau : phi* k) at 0 must equal
        // (L_u tau) : k + tau : (L_u k).
        let mut r = rng(35);
        for _ in 0..10 {
            let l = crate::testutil::rand_mat(&mut r, 1.0);
            let grad = spatial(l, Variance::UpDown);
            let tau0 = rand_sym(&mut r, 1.0);
            let k0 = rand_sym(&mut r, 1.0);
            let tau = spatial(tau0, Variance::ConCon);
            let k = spatial(k0, Variance::CovCov);
            let z_con = Tensor2::zeros(Variance::ConCon, Frame::Spatial);
            let z_cov = Tensor2::zeros(Variance::CovCov, Frame::Spatial);
            let ltau = lie_derivative(&grad, &tau, &z_con).unwrap();
            let lk = lie_derivative(&grad, &k, &z_cov).unwrap();
            let lhs = ltau.ddot(&k).unwrap() + tau.ddot(&lk).unwrap();

            // flow phi(h) = I + h L + h^2/2 L^2 + ... (truncated is fine for FD)
            let flow = |h: f64| {
                let mut p = Mat3::identity();
                let mut term = Mat3::identity();
                for n in 1..10 {
                    term = term * l * (h / n as f64);
                    p += term;
                }
                p
            };
            let h = 1e-5;
            let scalar_at = |h: f64| {
                let p = flow(h);
                let p_inv = p.try_inverse().unwrap();
                // phi* tau : phi* k with the variance-specific pull-backs
                let tau_h = p_inv * tau0 * p_inv.transpose();
                let k_h = p.transpose() * k0 * p;
                (tau_h.transpose() * k_h).trace()
            };
            let fd = (scalar_at(h) - scalar_at(-h)) / (2.0 * h);
            assert!((lhs - fd).abs() <= 1e-8 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn rigid_motion_has_zero_strain_rate_and_spin_from_rotation() {
        let rot = RotationSpec::spin(Vec3::new(0.3, -1.0, 0.8), 1.2);
        let m = MotionPath::rigid(rot.clone(), TranslationSpec::uniform(Vec3::x()));
        let s = motion_state(&m, &Vec3::new(0.1, 0.2, 0.3), 0.9).unwrap();
        assert!(s.d.norm() < 1e-13);
        assert!(s.gamma_t.norm() < 1e-13);
        let (q, q_t) = rot.at(0.9);
        assert!((s.w_hat.components() - q_t * q.transpose()).norm() < 1e-13);
    }

    #[test]
    fn uniform_dilation_stretches_isotropically() {
        let alpha = 0.35;
        let m = MotionPath::dilation(alpha);
        let s = motion_state(&m, &Vec3::zeros(), 1.3).unwrap();
        assert!((s.d_hat.components() - Mat3::identity() * alpha).norm() < 1e-13);
        let expect = s.gamma.components() * (2.0 * alpha);
        assert!((s.gamma_t.components() - expect).norm() < 1e-12 * (1.0 + expect.norm()));
    }

    #[test]
    fn metric_rate_is_twice_pulled_back_strain_rate() {
        let m = MotionPath::simple_shear(1.0);
        for &t in &[0.2, 0.7, 1.5] {
            let s = motion_state(&m, &Vec3::zeros(), t).unwrap();
            let two_pd = s.pull_back(&s.d).unwrap().scale(2.0);
            assert!((s.gamma_t.components() - two_pd.components()).norm() < 1e-12);
            // FD of gamma in t
            let h = 1e-5;
            let gp = motion_state(&m, &Vec3::zeros(), t + h).unwrap();
            let gm = motion_state(&m, &Vec3::zeros(), t - h).unwrap();
            let fd = (gp.gamma.components() - gm.gamma.components()) / (2.0 * h);
            assert!((s.gamma_t.components() - fd).norm() <= 1e-10 * (1.0 + fd.norm()));
        }
    }

    #[test]
    fn cauchy_green_tensors_pull_back_to_metric_ratios() {
        let m = MotionPath::rot_stretch(RotationSpec::spin(Vec3::z(), 0.8), 0.5, 1);
        let s = motion_state(&m, &Vec3::zeros(), 1.1).unwrap();
        // p* b = gamma0^{-1}
        let pb = s.pull_back(&s.b_left).unwrap();
        assert!((pb.components() - s.gamma0.inv_components()).norm() < 1e-12);
        // p0* C = gamma
        let p0c = pull_back_with(&s.f0, &s.c_right).unwrap();
        assert!(
            (p0c.components() - s.gamma.components()).norm()
                < 1e-12 * (1.0 + s.gamma.components().norm())
        );
    }

    #[test]
    fn composition_with_rigid_path_preserves_pulled_back_metric() {
        let m = MotionPath::uniaxial(0.6, 0);
        let g = RigidPath::new(
            "wobble",
            RotationSpec::wobble(Vec3::new(1.0, 1.0, 0.0), 0.7, 0.2, 3.0),
            TranslationSpec::uniform(Vec3::new(0.0, 0.1, 0.0)),
        );
        let sup = m.superpose_rigid(&g);
        for &t in &[0.0, 0.4, 1.0] {
            let a = motion_state(&m, &Vec3::zeros(), t).unwrap();
            let b = motion_state(&sup, &Vec3::zeros(), t).unwrap();
            assert!(
                (a.gamma.components() - b.gamma.components()).norm()
                    <= 1e-13 * (1.0 + a.gamma.components().norm())
            );
        }
    }

    #[test]
    fn velocity_gradient_transforms_with_drive_spin_under_rigid_paths() {
        let m = MotionPath::simple_shear(0.9);
        let g = RigidPath::new(
            "spin",
            RotationSpec::spin(Vec3::z(), 1.5),
            TranslationSpec::zero(),
        );
        let sup = m.superpose_rigid(&g);
        let t = 0.8;
        let s = motion_state(&m, &Vec3::zeros(), t).unwrap();
        let sb = motion_state(&sup, &Vec3::zeros(), t).unwrap();
        let (q, q_t, _, _) = g.at(t);
        let omega = q_t * q.transpose();
        let expect = q * s.grad_u.components() * q.transpose() + omega;
        assert!((sb.grad_u.components() - expect).norm() < 1e-13);
        // stretch rate is objective, spin is not
        let d_expect = q * s.d_hat.components() * q.transpose();
        assert!((sb.d_hat.components() - d_expect).norm() < 1e-13);
        let w_transported = q * s.w_hat.components() * q.transpose();
        assert!((sb.w_hat.components() - w_transported - omega).norm() < 1e-13);
    }

    #[test]
    fn hencky_strain_special_cases() {
        // gamma = gamma0 -> zero
        let m = MotionPath::rigid(RotationSpec::spin(Vec3::z(), 1.0), TranslationSpec::zero());
        let s = motion_state(&m, &Vec3::zeros(), 0.7).unwrap();
        let e = hencky_strain(&s, &s.gamma0).unwrap();
        assert!(e.norm() < 1e-13);

        // uniform dilation: gamma = exp(2 alpha t) gamma0 -> E = alpha t gamma0
        let alpha = 0.4;
        let t = 1.2;
        let md = MotionPath::dilation(alpha);
        let sd = motion_state(&md, &Vec3::zeros(), t).unwrap();
        let e = hencky_strain(&sd, &sd.gamma0).unwrap();
        let expect = sd.gamma0.components() * (alpha * t);
        assert!((e.components() - expect).norm() <= 1e-12 * (1.0 + expect.norm()));

        // uniaxial stretch lambda: principal value ln(lambda) along the axis
        let mu = MotionPath::uniaxial(0.5, 2);
        let su = motion_state(&mu, &Vec3::zeros(), 1.0).unwrap();
        let lambda = 0.5f64.exp();
        let e = hencky_strain(&su, &su.gamma0).unwrap();
        let eig = e.components().symmetric_eigenvalues();
        let max = eig.max();
        assert!((max - lambda.ln()).abs() < 1e-12);
    }

    #[test]
    fn stresses_at_reference_and_under_rigid_motion() {
        let m = MotionPath::rigid(RotationSpec::identity(), TranslationSpec::zero());
        let s = motion_state_with_density(&m, &Vec3::zeros(), 0.0, 2.5).unwrap();
        let sigma = spatial(rand_sym(&mut rng(36), 1.0), Variance::ConCon);
        let st = stresses(&s, &sigma).unwrap();
        assert!((st.theta.components() - sigma.components() / 2.5).norm() < 1e-13);

        // hydrostatic stress under a rotating motion: theta = -(pi/rho) gamma^{-1}
        let pressure = 0.8;
        let mr = MotionPath::rigid(RotationSpec::spin(Vec3::y(), 0.9), TranslationSpec::zero());
        let sr = motion_state_with_density(&mr, &Vec3::zeros(), 1.1, 1.7).unwrap();
        let sigma_h = Tensor2::metric_q_inv().scale(-pressure);
        let st = stresses(&sr, &sigma_h).unwrap();
        let expect = sr.gamma.inv_components() * (-pressure / sr.rho);
        assert!((st.theta.components() - expect).norm() < 1e-12);
    }

    #[test]
    fn virtual_work_pairing_matches_after_change_of_variables() {
        // theta : (p* k) = (sigma / rho) : k pointwise, so mu-weighted body
        // sums equal the spatial pairing.
        let mut r = rng(37);
        let m = MotionPath::rot_stretch(RotationSpec::spin(Vec3::x(), 0.6), 0.4, 0);
        let s = motion_state_with_density(&m, &Vec3::zeros(), 0.9, 1.3).unwrap();
        for _ in 0..10 {
            let sigma = spatial(rand_sym(&mut r, 1.0), Variance::ConCon);
            let k = spatial(rand_sym(&mut r, 1.0), Variance::CovCov);
            let st = stresses(&s, &sigma).unwrap();
            let body = st.theta.ddot(&s.pull_back(&k).unwrap()).unwrap();
            let space = sigma.scale(1.0 / s.rho).ddot(&k).unwrap();
            assert!((body - space).abs() <= 1e-12 * (1.0 + space.abs()));
        }
    }

    #[test]
    fn mass_density_closed_forms_and_conservation() {
        let m = MotionPath::rigid(RotationSpec::identity(), TranslationSpec::zero());
        let s = motion_state(&m, &Vec3::zeros(), 0.0).unwrap();
        assert!((mass_density(&s, 3.0).unwrap() - 3.0).abs() < 1e-15);

        let d = MotionPath::dilation(2.0f64.ln());
        let sd = motion_state(&d, &Vec3::zeros(), 1.0).unwrap();
        assert!((mass_density(&sd, 3.0).unwrap() - 3.0 / 8.0).abs() < 1e-12);

        // conservation: d(rho)/dt + rho tr(grad u) = 0 along the motion
        let mm = MotionPath::rot_stretch(RotationSpec::spin(Vec3::z(), 0.7), 0.5, 1);
        let t = 0.8;
        let h = 1e-5;
        let rho = |t: f64| motion_state(&mm, &Vec3::zeros(), t).unwrap().rho;
        let st = motion_state(&mm, &Vec3::zeros(), t).unwrap();
        let drho = (rho(t + h) - rho(t - h)) / (2.0 * h);
        let resid = drho + st.rho * st.grad_u.components().trace();
        assert!(resid.abs() <= 1e-8 * (1.0 + st.rho));
    }

    #[test]
    fn zero_density_is_rejected() {
        let m = MotionPath::dilation(0.1);
        assert!(matches!(
            motion_state_with_density(&m, &Vec3::zeros(), 0.5, 0.0),
            Err(Error::ZeroDensity(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn push_forward_inverts_pull_back(seed in 0u64..500) {
            let mut r = rng(seed);
            let f = rand_invertible(&mut r);
            prop_assume!(f.determinant() > 0.05);
            let kinds = [Variance::CovCov, Variance::ConCon, Variance::UpDown, Variance::DownUp];
            for v in kinds {
                let t = spatial(crate::testutil::rand_mat(&mut r, 1.0), v);
                let round = push_forward_with(&f, &pull_back_with(&f, &t).unwrap()).unwrap();
                prop_assert!(
                    (round.components() - t.components()).norm() <= 1e-13 * (1.0 + t.components().norm() * 10.0)
                );
            }
        }
    }
}
