//! The two-point potential rho_L = Li2(theta^L) and its closed-form mixed
//! Wirtinger derivative, the kernel behind the variance integrals. The
//! closed forms here are cross-validated against finite differences, which
//! gives a local deterministic probe of the whole variance pipeline.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{hermitian_inner, norm_sq, theta, Params};
use crate::specfun::dilog;

/// An ordered pair of interior points of the ball.
#[derive(Debug, Clone)]
pub struct PointPair {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl PointPair {
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>) -> Result<Self> {
        if z.len() != w.len() {
            return Err(Error::LengthMismatch {
                left: z.len(),
                right: w.len(),
            });
        }
        if norm_sq(&z) >= 1.0 || norm_sq(&w) >= 1.0 {
            return Err(Error::domain("PointPair", "points must lie inside the ball"));
        }
        Ok(PointPair { z, w })
    }
}

/// rho_L(z, w) = Li2(theta(z, w)^L), in (0, pi^2/6], with the maximum
/// attained exactly on the diagonal.
pub fn rho(pp: &PointPair, intensity: f64) -> Result<f64> {
    let th = theta(&pp.z, &pp.w)?;
    dilog((intensity * th.ln()).exp().min(1.0))
}

/// d theta / d conj(z_j) =
/// (1-|w|^2)/|1 - conj(z).w|^2 ((1-|z|^2) w_j/(1 - conj(z).w) - z_j).
pub fn dtheta_dzbar(pp: &PointPair, j: usize) -> Result<Complex64> {
    let zbar_w = hermitian_inner(&pp.z, &pp.w)?.conj(); // conj(z).w
    let one = Complex64::new(1.0, 0.0);
    let denom = (one - zbar_w).norm_sqr();
    let zn = norm_sq(&pp.z);
    let wn = norm_sq(&pp.w);
    Ok((1.0 - wn) / denom * ((1.0 - zn) * pp.w[j] / (one - zbar_w) - pp.z[j]))
}

/// d theta / d conj(w_k), by the z <-> w symmetry of theta.
pub fn dtheta_dwbar(pp: &PointPair, k: usize) -> Result<Complex64> {
    let z_wbar = hermitian_inner(&pp.z, &pp.w)?; // z.conj(w)
    let one = Complex64::new(1.0, 0.0);
    let denom = (one - z_wbar).norm_sqr();
    let zn = norm_sq(&pp.z);
    let wn = norm_sq(&pp.w);
    Ok((1.0 - zn) / denom * ((1.0 - wn) * pp.z[k] / (one - z_wbar) - pp.w[k]))
}

/// The mixed derivative d^2 rho_L / d conj(z_j) d conj(w_k) at a general
/// off-diagonal pair:
/// (L^2/theta^2) theta^L/(1-theta^L) dtheta/dconj(z_j) dtheta/dconj(w_k).
///
/// theta^L/(1-theta^L) is evaluated as exp(L ln theta)/(-expm1(L ln theta)),
/// which survives the near-diagonal cancellation.
pub fn mixed_derivative(pp: &PointPair, intensity: f64, j: usize, k: usize) -> Result<Complex64> {
    let th = theta(&pp.z, &pp.w)?;
    let log_pow = intensity * th.ln();
    if log_pow.exp() >= 1.0 - 1e-14 {
        return Err(Error::Singularity {
            op: "mixed_derivative",
            msg: format!("theta^L = {} too close to the diagonal", log_pow.exp()),
        });
    }
    let ratio = log_pow.exp() / (-log_pow.exp_m1());
    let scale = intensity * intensity / (th * th) * ratio;
    Ok(scale * dtheta_dzbar(pp, j)? * dtheta_dwbar(pp, k)?)
}

/// The same mixed derivative specialised to sphere points z = r xi,
/// w = r eta with |xi| = |eta| = 1:
///
/// L^2 (1-r^2)^{2L-2} r^2 / (|1-r^2 conj(xi).eta|^{2L} - (1-r^2)^{2L})
/// x [(1-r^2) eta_j - xi_j (1-r^2 conj(xi).eta)]
///   [(1-r^2) xi_k - eta_k (1-r^2 xi.conj(eta))] / |1-r^2 conj(xi).eta|^2.
pub fn mixed_derivative_sphere(
    xi: &[Complex64],
    eta: &[Complex64],
    p: &Params,
    j: usize,
    k: usize,
) -> Result<Complex64> {
    let r2 = p.radius * p.radius;
    let om = p.one_minus_r2();
    let one = Complex64::new(1.0, 0.0);
    let xi_etabar = hermitian_inner(xi, eta)?; // xi . conj(eta)
    let xibar_eta = xi_etabar.conj();
    let a = one - r2 * xibar_eta;
    let a2 = a.norm_sqr();
    // (1-r^2)^{2L-2} / (|..|^{2L} - (1-r^2)^{2L}) in underflow-safe form
    let em = (p.intensity * (a2 / (om * om)).ln()).exp_m1();
    if em <= 0.0 {
        return Err(Error::Singularity {
            op: "mixed_derivative_sphere",
            msg: "coincident sphere directions".into(),
        });
    }
    let pref = p.intensity * p.intensity * r2 / (om * om * em);
    let bj = om * eta[j] - xi[j] * a;
    let bk = om * xi[k] - eta[k] * (one - r2 * xi_etabar);
    Ok(pref * bj * bk / a2)
}
