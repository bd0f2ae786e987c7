//! Geometry of the unit ball of C^n: the covariance kernel, ball
//! automorphisms, the pseudo-hyperbolic distance, expected zero-set volumes,
//! and the (w, psi) parametrisation of the unit sphere under which the
//! boundary forms become scalar weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ln_factorial;

/// A problem instance: dimension n >= 2, intensity L > 0, radius r in (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub intensity: f64,
    pub radius: f64,
}

impl Params {
    pub fn new(n: u32, intensity: f64, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("Params", format!("n = {n} must be >= 2")));
        }
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::domain("Params", format!("L = {intensity} must be > 0")));
        }
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::domain(
                "Params",
                format!("r = {radius} must lie in (0, 1)"),
            ));
        }
        Ok(Params {
            n,
            intensity,
            radius,
        })
    }

    /// 1 - r^2, the recurring conformal factor.
    pub fn one_minus_r2(&self) -> f64 {
        1.0 - self.radius * self.radius
    }
}

/// A point of the unit sphere of C^n in the coordinates (w, psi):
/// the first n-1 components are w in the unit ball of C^{n-1} and the last
/// is sqrt(1-|w|^2) e^{i psi}.
#[derive(Debug, Clone)]
pub struct SpherePoint {
    pub base: Vec<Complex64>,
    pub psi: f64,
}

pub fn norm_sq(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

fn check_in_ball(op: &'static str, z: &[Complex64]) -> Result<()> {
    let n2 = norm_sq(z);
    if n2 >= 1.0 {
        return Err(Error::domain(op, format!("|z|^2 = {n2} not < 1")));
    }
    Ok(())
}

/// Hermitian inner product z . conj(w).
pub fn hermitian_inner(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: w.len(),
        });
    }
    Ok(z.iter().zip(w).map(|(a, b)| a * b.conj()).sum())
}

/// Covariance kernel K_L(z, w) = (1 - z.conj(w))^{-L}, principal branch.
///
/// |z.conj(w)| < 1 keeps 1 - z.conj(w) away from (-inf, 0], so the principal
/// logarithm is single-valued on the whole domain.
pub fn covariance_kernel(z: &[Complex64], w: &[Complex64], intensity: f64) -> Result<Complex64> {
    check_in_ball("covariance_kernel", z)?;
    check_in_ball("covariance_kernel", w)?;
    let inner = hermitian_inner(z, w)?;
    Ok(((Complex64::new(1.0, 0.0) - inner).ln() * (-intensity)).exp())
}

/// The involutive automorphism phi_w of the ball with phi_w(w) = 0 and
/// phi_w(0) = w, evaluated at z:
/// phi_w(z) = (w - P_w z - s_w Q_w z) / (1 - <z, w>),
/// with P_w the projection onto the complex line through w, Q_w = I - P_w,
/// and s_w = sqrt(1 - |w|^2). phi_0 is the identity.
pub fn moebius(w: &[Complex64], z: &[Complex64]) -> Result<Vec<Complex64>> {
    check_in_ball("moebius", w)?;
    check_in_ball("moebius", z)?;
    if w.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: z.len(),
        });
    }
    let w_norm2 = norm_sq(w);
    if w_norm2 == 0.0 {
        return Ok(z.to_vec());
    }
    let inner = hermitian_inner(z, w)?; // <z, w>
    let s = (1.0 - w_norm2).sqrt();
    let proj = inner / w_norm2; // coefficient of P_w z along w
    let denom = Complex64::new(1.0, 0.0) - inner;
    let out = w
        .iter()
        .zip(z)
        .map(|(wj, zj)| {
            let p = proj * wj;
            let q = zj - p;
            (wj - p - s * q) / denom
        })
        .collect();
    Ok(out)
}

/// Pseudo-hyperbolic distance rho(z, w) = |phi_w(z)|.
pub fn pseudo_hyperbolic_distance(z: &[Complex64], w: &[Complex64]) -> Result<f64> {
    Ok(norm_sq(&moebius(w, z)?).sqrt())
}

/// theta(z, w) = (1-|z|^2)(1-|w|^2)/|1 - z.conj(w)|^2 = 1 - rho(z,w)^2.
pub fn theta(z: &[Complex64], w: &[Complex64]) -> Result<f64> {
    check_in_ball("theta", z)?;
    check_in_ball("theta", w)?;
    let inner = hermitian_inner(z, w)?;
    let denom = (Complex64::new(1.0, 0.0) - inner).norm_sqr();
    Ok((1.0 - norm_sq(z)) * (1.0 - norm_sq(w)) / denom)
}

/// Expected invariant volume of the zero variety in the ball of radius r:
/// L/(n-1)! * r^{2n}/(1-r^2)^n.
pub fn expected_invariant_volume(p: &Params) -> f64 {
    let n = p.n as f64;
    let r2 = p.radius * p.radius;
    p.intensity * (-ln_factorial(p.n as u64 - 1)).exp() * r2.powf(n) / (1.0 - r2).powf(n)
}

/// Expected Euclidean volume: L/(n-1)! * r^{2n}/(1-r^2).
pub fn expected_euclidean_volume(p: &Params) -> f64 {
    let n = p.n as f64;
    let r2 = p.radius * p.radius;
    p.intensity * (-ln_factorial(p.n as u64 - 1)).exp() * r2.powf(n) / (1.0 - r2)
}

/// Map a SpherePoint to the unit vector alpha in C^n:
/// alpha_j = w_j for j < n, alpha_n = sqrt(1-|w|^2) e^{i psi}.
pub fn sphere_param(sp: &SpherePoint, n: u32) -> Result<Vec<Complex64>> {
    if sp.base.len() + 1 != n as usize {
        return Err(Error::LengthMismatch {
            left: sp.base.len() + 1,
            right: n as usize,
        });
    }
    let w2 = norm_sq(&sp.base);
    if w2 >= 1.0 {
        return Err(Error::domain("sphere_param", format!("|w|^2 = {w2} not < 1")));
    }
    let mut alpha = sp.base.clone();
    alpha.push(Complex64::from_polar((1.0 - w2).sqrt(), sp.psi));
    Ok(alpha)
}

/// Scalar weights of the boundary forms gamma_j in the (w, psi) chart:
/// (conj(w_1), ..., conj(w_{n-1}), sqrt(1-|w|^2) e^{-i psi}).
///
/// Integrating sum_j g_j gamma_j over the sphere equals integrating
/// sum_j g_j weight_j against d psi/(2 pi) x Lebesgue(w)/pi^{n-1}. The
/// weights are exactly the conjugates of [`sphere_param`], which is what
/// makes sum_j alpha_j weight_j = 1 identically.
pub fn gamma_form_weights(sp: &SpherePoint, n: u32) -> Result<Vec<Complex64>> {
    Ok(sphere_param(sp, n)?.into_iter().map(|a| a.conj()).collect())
}
