//! Exact variance of the Euclidean / invariant zero-set volume, by two
//! independent quadrature representations: a positive integral over the unit
//! disk, and a nested (s, theta) form obtained from it by a polar-type change
//! of variables. The two must agree to quadrature accuracy, which is the
//! library's primary internal consistency check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::quad::{adaptive_1d, gauss_legendre, integrate_disk_budget, QuadResult};
use crate::specfun::ln_factorial;

/// Which representation evaluates the variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Disk,
    Polar,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Route::Disk => write!(f, "disk"),
            Route::Polar => write!(f, "polar"),
        }
    }
}

/// The disk-route integrand with the factor (1-r^2)^{2L} divided out of the
/// denominator, which is how the quadrature consumes it: both
/// |1 - r^2 w|^{2L} and (1-r^2)^{2L} underflow separately at large L, while
/// the reduced form stays in range.
///
/// reduced(w) = (1-|w|^2)^{n-2} |1-w|^2 / (|1-r^2 w|^2 expm1(L ln t)),
/// t = |1-r^2 w|^2/(1-r^2)^2.
fn integrand_disk_reduced(w: Complex64, p: &Params) -> f64 {
    let om = p.one_minus_r2();
    let r2 = p.radius * p.radius;
    let one_minus_r2w = Complex64::new(1.0 - r2 * w.re, -r2 * w.im);
    let a2 = one_minus_r2w.norm_sqr();
    let em = (p.intensity * (a2 / (om * om)).ln()).exp_m1();
    let radial = (1.0 - w.norm_sqr()).max(0.0);
    let v = radial.powi(p.n as i32 - 2) * (Complex64::new(1.0 - w.re, -w.im)).norm_sqr()
        / (a2 * em);
    // 0/0 at w = 1 has limit 0; +inf expm1 at large L also means 0
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// The literal positive disk integrand
/// (1-|w|^2)^{n-2} / (|1-r^2 w|^{2L} - (1-r^2)^{2L}) * |1-w|^2 / |1-r^2 w|^2.
pub fn integrand_disk(w: Complex64, p: &Params) -> Result<f64> {
    if w.norm_sqr() >= 1.0 {
        return Err(Error::domain(
            "integrand_disk",
            format!("|w| = {} not < 1", w.norm()),
        ));
    }
    if w == Complex64::new(1.0, 0.0) || (w - Complex64::new(1.0, 0.0)).norm() == 0.0 {
        return Err(Error::Singularity {
            op: "integrand_disk",
            msg: "the boundary point w = 1 is excluded".into(),
        });
    }
    let om = p.one_minus_r2();
    Ok(integrand_disk_reduced(w, p) * (-2.0 * p.intensity * om.ln()).exp())
}

fn factorial_prefactor(p: &Params) -> f64 {
    (-ln_factorial(p.n as u64 - 1) - ln_factorial(p.n as u64 - 2)).exp()
}

/// Var E by adaptive quadrature of the disk representation:
/// r^{4n} L^2 (1-r^2)^{2L-2} / ((n-1)!(n-2)!) int_D integrand dm/pi.
pub fn var_e_disk(p: &Params, tol: f64) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::domain("var_e_disk", format!("tol = {tol} must be > 0")));
    }
    let om = p.one_minus_r2();
    let pref = p.radius.powi(4 * p.n as i32) * p.intensity * p.intensity
        / (om * om)
        * factorial_prefactor(p);
    let quad = integrate_disk_budget(&mut |w| integrand_disk_reduced(w, p), tol, 60_000_000);
    match quad {
        Ok(q) => Ok(QuadResult {
            value: pref * q.value,
            abs_err_est: pref * q.abs_err_est,
            n_evals: q.n_evals,
        }),
        Err(Error::QuadBudget {
            value,
            abs_err_est,
            n_evals,
        }) => Err(Error::QuadBudget {
            value: pref * value,
            abs_err_est: pref * abs_err_est,
            n_evals,
        }),
        Err(e) => Err(e),
    }
}

/// Lower endpoint of the s-range, epsilon(r) = (1-r^2)/(1+r^2).
pub fn s_lower(p: &Params) -> f64 {
    p.one_minus_r2() / (1.0 + p.radius * p.radius)
}

/// 2 - 2 cos(alpha(s, r)) without cancellation:
/// (1+r^2)(1-s)(s - eps)/s, an exact rearrangement of the defining formula.
fn two_minus_two_cos_alpha(one_minus_s: f64, s_minus_eps: f64, s: f64, p: &Params) -> f64 {
    (1.0 + p.radius * p.radius) * one_minus_s * s_minus_eps / s
}

/// The angle alpha(s, r) = arccos[((1+r^2)s + (1-r^2)/s)/2], in [0, pi/2].
///
/// Vanishes at both endpoints s = eps(r) and s = 1 and is maximal at
/// s = sqrt(eps(r)). Arguments pushing the cosine beyond 1 by more than
/// 1e-14 are rejected; smaller excursions are clamped.
pub fn alpha_angle(s: f64, p: &Params) -> Result<f64> {
    let eps = s_lower(p);
    let v = two_minus_two_cos_alpha(1.0 - s, s - eps, s, p);
    // cos(alpha) = 1 - v/2, so v < 0 means the argument exceeds 1
    if v < -2e-14 {
        return Err(Error::domain(
            "alpha_angle",
            format!("s = {s} outside [{eps}, 1]"),
        ));
    }
    Ok(2.0 * ((v.max(0.0)).sqrt() / 2.0).asin())
}

/// Inner theta-integral of the polar representation,
/// A(s) = int_0^alpha (2cos t - 2cos alpha)^{n-2} (s + 1/s - 2cos t) dt,
/// on the cancellation-free product form
/// (2cos t - 2cos alpha) = 4 sin((alpha+t)/2) sin((alpha-t)/2) and
/// (s + 1/s - 2cos t) = (1-s)^2/s + 4 sin^2(t/2).
///
/// The integrand is a polynomial of degree n-1 in cos t, so a fixed
/// Gauss-Legendre rule resolves it to machine precision.
fn inner_theta_integral(s: f64, alpha: f64, p: &Params) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    let order = 24.max(2 * p.n as usize);
    let (nodes, weights) = gauss_legendre(order);
    let shift = (1.0 - s) * (1.0 - s) / s;
    let half = 0.5 * alpha;
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let t = half * (x + 1.0);
        let base = 4.0 * (0.5 * (alpha + t)).sin() * (0.5 * (alpha - t)).sin();
        let h = base.powi(p.n as i32 - 2) * (shift + 4.0 * (0.5 * t).sin().powi(2));
        acc += w * h;
    }
    acc * half
}

/// Var E by the nested (s, theta) representation:
/// 2 L^2 (1-r^2)^{n-2} / (pi (n-1)!(n-2)!) K(L, r), where K integrates
/// s^{2L-n}/(1 - s^{2L}) A(s) over s in (eps(r), 1).
///
/// The outer integrand carries half-power behaviour at both endpoints, so
/// the range is split at sqrt(eps) and each side is mapped by a square-root
/// substitution (s = eps + v^2, s = 1 - u^2) before adaptive quadrature.
pub fn var_e_polar(p: &Params, tol: f64) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::domain("var_e_polar", format!("tol = {tol} must be > 0")));
    }
    let eps = s_lower(p);
    let ell = p.intensity;
    let n = p.n;
    let om = p.one_minus_r2();
    let mid = eps.sqrt();
    let order = 24.max(2 * n as usize) as u64;

    // shared core: F(s) ds expressed through the stable pieces
    let eval = |one_minus_s: f64, s_minus_eps: f64| -> f64 {
        let s = 1.0 - one_minus_s;
        if one_minus_s <= 0.0 || s_minus_eps <= 0.0 {
            return 0.0;
        }
        let v = two_minus_two_cos_alpha(one_minus_s, s_minus_eps, s, p);
        let alpha = 2.0 * ((v.max(0.0)).sqrt() / 2.0).asin();
        let den = -(2.0 * ell * s.ln()).exp_m1(); // 1 - s^{2L}
        let spow = ((2.0 * ell - n as f64) * s.ln()).exp();
        let val = spow / den * inner_theta_integral(s, alpha, p);
        if val.is_finite() {
            val
        } else {
            0.0
        }
    };

    let mut evals_low = 0u64;
    let low = adaptive_1d(
        |v| {
            evals_low += 1;
            // s = eps + v^2
            let s_minus_eps = v * v;
            let one_minus_s = 1.0 - eps - s_minus_eps;
            eval(one_minus_s, s_minus_eps) * 2.0 * v
        },
        0.0,
        (mid - eps).sqrt(),
        0.5 * tol,
        0.0,
        4_000_000,
    )?;
    let mut evals_high = 0u64;
    let high = adaptive_1d(
        |u| {
            evals_high += 1;
            // s = 1 - u^2
            let one_minus_s = u * u;
            let s_minus_eps = 1.0 - eps - one_minus_s;
            eval(one_minus_s, s_minus_eps) * 2.0 * u
        },
        0.0,
        (1.0 - mid).sqrt(),
        0.5 * tol,
        0.0,
        4_000_000,
    )?;

    let pref = 2.0 * ell * ell * om.powi(n as i32 - 2) / std::f64::consts::PI
        * factorial_prefactor(p);
    Ok(QuadResult {
        value: pref * (low.value + high.value),
        abs_err_est: pref * (low.abs_err_est + high.abs_err_est),
        n_evals: (evals_low + evals_high) * order,
    })
}

/// Var E by the requested route.
pub fn var_e(p: &Params, tol: f64, route: Route) -> Result<QuadResult> {
    match route {
        Route::Disk => var_e_disk(p, tol),
        Route::Polar => var_e_polar(p, tol),
    }
}

/// Var I = Var E / (1-r^2)^{2n-2}.
pub fn var_i(p: &Params, tol: f64, route: Route) -> Result<QuadResult> {
    let scale = p.one_minus_r2().powi(-(2 * p.n as i32 - 2));
    let rescale = |q: QuadResult| QuadResult {
        value: q.value * scale,
        abs_err_est: q.abs_err_est * scale,
        n_evals: q.n_evals,
    };
    match var_e(p, tol, route) {
        Ok(q) => Ok(rescale(q)),
        Err(Error::QuadBudget {
            value,
            abs_err_est,
            n_evals,
        }) => Err(Error::QuadBudget {
            value: value * scale,
            abs_err_est: abs_err_est * scale,
            n_evals,
        }),
        Err(e) => Err(e),
    }
}

/// Route heuristic: the disk integrand peaks in an O((1-r^2)/L)
/// neighbourhood of w = 1, so the flattened polar form takes over for
/// large L and for radii close to 1.
pub fn preferred_route(p: &Params) -> Route {
    if p.intensity <= 20.0 && p.radius < 0.9 {
        Route::Disk
    } else {
        Route::Polar
    }
}

/// Var I by the route [`preferred_route`] picks.
pub fn var_i_auto(p: &Params, tol: f64) -> Result<QuadResult> {
    var_i(p, tol, preferred_route(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn params(n: u32, l: f64, r: f64) -> Params {
        Params::new(n, l, r).unwrap()
    }

    #[test]
    fn integrand_reference_point() {
        // w = 0, n = 2, L = 1, r^2 = 0.5: 1/(1 - 0.25) = 4/3
        let p = params(2, 1.0, 0.5f64.sqrt());
        let v = integrand_disk(Complex64::new(0.0, 0.0), &p).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn integrand_positive_on_random_nodes() {
        let mut rng = ChaCha12Rng::seed_from_u64(0xd15c);
        for &(n, l, r) in &[(2u32, 0.5f64, 0.3f64), (2, 2.0, 0.7), (3, 1.0, 0.5), (3, 5.0, 0.9)] {
            let p = params(n, l, r);
            for _ in 0..2500 {
                let rho: f64 = rng.gen_range(0.0..1.0f64).sqrt();
                let phi: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let w = Complex64::from_polar(rho, phi);
                let v = integrand_disk(w, &p).unwrap();
                assert!(v >= 0.0 && v.is_finite(), "integrand {v} at {w}");
            }
            // negative real axis: |1 - r^2 w| > 1 > 1 - r^2, so positive
            let v = integrand_disk(Complex64::new(-0.8, 0.0), &p).unwrap();
            assert!(v > 0.0);
        }
        let p = params(2, 1.0, 0.5);
        assert!(integrand_disk(Complex64::new(1.0, 0.0), &p).is_err());
        assert!(integrand_disk(Complex64::new(1.5, 0.0), &p).is_err());
    }

    #[test]
    fn alpha_angle_endpoints_and_peak() {
        let p = params(2, 1.0, 0.6);
        let eps = s_lower(&p);
        assert!(alpha_angle(1.0, &p).unwrap().abs() < 1e-7);
        assert!(alpha_angle(eps, &p).unwrap().abs() < 1e-7);
        let r = p.radius;
        let want = (1.0 - r.powi(4)).sqrt().acos();
        let got = alpha_angle(eps.sqrt(), &p).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!(alpha_angle(eps - 1e-3, &p).is_err());
        assert!(alpha_angle(1.1, &p).is_err());
    }

    #[test]
    fn inner_integral_empty_range() {
        let p = params(3, 1.0, 0.5);
        assert_eq!(inner_theta_integral(1.0, 0.0, &p), 0.0);
    }

    #[test]
    fn routes_agree_reference_value() {
        // pinned by an independent high-precision run of both
        // representations: Var E(n=2, L=2, r=0.5)
        let p = params(2, 2.0, 0.5);
        let want = 1.567983087450e-2;
        let disk = var_e_disk(&p, 1e-9).unwrap();
        let polar = var_e_polar(&p, 1e-9).unwrap();
        assert!((disk.value - want).abs() / want < 1e-8, "disk {}", disk.value);
        assert!((polar.value - want).abs() / want < 1e-8, "polar {}", polar.value);
        assert!((disk.value - polar.value).abs() / want < 1e-8);
        assert!(disk.abs_err_est <= 1e-8 * disk.value);
    }

    #[test]
    fn routes_agree_spot_checks() {
        for &(n, l, r) in &[(2u32, 0.5f64, 0.3f64), (3, 1.0, 0.7), (2, 5.0, 0.9)] {
            let p = params(n, l, r);
            let disk = var_e_disk(&p, 1e-9).unwrap();
            let polar = var_e_polar(&p, 1e-9).unwrap();
            let gap = (disk.value - polar.value).abs() / polar.value;
            assert!(gap < 1e-8, "(n={n}, L={l}, r={r}): gap {gap}");
            assert!(disk.value > 0.0 && polar.value > 0.0);
        }
    }

    #[test]
    fn var_i_is_var_e_rescaled() {
        let p = params(2, 2.0, 0.5);
        let ve = var_e_polar(&p, 1e-9).unwrap();
        let vi = var_i(&p, 1e-9, Route::Polar).unwrap();
        let scale = p.one_minus_r2().powi(-2);
        assert_eq!(vi.value, ve.value * scale);
        // and the ratio is L-independent
        let p2 = params(2, 7.0, 0.5);
        let vi2 = var_i(&p2, 1e-9, Route::Polar).unwrap();
        let ve2 = var_e_polar(&p2, 1e-9).unwrap();
        assert_eq!(vi2.value, ve2.value * scale);
    }

    #[test]
    fn variance_increases_towards_boundary() {
        let p0 = params(2, 2.0, 0.5);
        let mut last = 0.0;
        for i in 0..10 {
            let r = 0.3 + (0.99 - 0.3) * (i as f64 / 9.0);
            let p = Params::new(p0.n, p0.intensity, r).unwrap();
            let vi = var_i_auto(&p, 1e-8).unwrap().value;
            assert!(vi > last, "Var I not increasing at r = {r}");
            last = vi;
        }
    }

    #[test]
    fn tolerance_halving_is_within_error_estimate() {
        for &(n, l, r) in &[(2u32, 2.0f64, 0.5f64), (3, 1.0, 0.7)] {
            let p = params(n, l, r);
            for route in [Route::Disk, Route::Polar] {
                let coarse = var_e(&p, 1e-6, route).unwrap();
                let fine = var_e(&p, 5e-7, route).unwrap();
                assert!(
                    (coarse.value - fine.value).abs() <= coarse.abs_err_est,
                    "route {route}: shift {} vs est {}",
                    (coarse.value - fine.value).abs(),
                    coarse.abs_err_est
                );
            }
        }
    }

    #[test]
    fn large_intensity_polar_route() {
        // s^{2L} mass concentrates at s = 1; the substitution keeps the
        // integrand resolvable at L = 400
        let p = params(2, 400.0, 0.5);
        let v = var_e_polar(&p, 1e-9).unwrap();
        assert!(v.value > 0.0 && v.value.is_finite());
    }
}
