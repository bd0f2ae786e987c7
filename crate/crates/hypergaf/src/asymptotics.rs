//! Closed-form asymptotic laws for the invariant-volume variance: the
//! intensity limit L -> infinity at fixed radius, and the boundary limit
//! r -> 1 at fixed intensity with its three regimes separated at L = n/2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{expected_invariant_volume, Params};
use crate::specfun::{gamma_ratio_combination, ln_factorial, log_gamma, riemann_zeta};
use crate::variance::var_i_auto;

/// Boundary-limit regime of Var I as r -> 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeTag {
    SubCritical,
    Critical,
    SuperCritical,
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeTag::SubCritical => write!(f, "subcritical"),
            RegimeTag::Critical => write!(f, "critical"),
            RegimeTag::SuperCritical => write!(f, "supercritical"),
        }
    }
}

/// Blow-up description: Var I ~ C / (1-r^2)^exponent, with an extra
/// log(1/(1-r^2)) factor exactly in the critical case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub exponent: f64,
    pub has_log_factor: bool,
}

/// Classify by the sign of L - n/2; equality is decided at 1e-12.
pub fn classify_regime(p: &Params) -> Regime {
    let half_n = p.n as f64 / 2.0;
    if (p.intensity - half_n).abs() <= 1e-12 {
        Regime {
            tag: RegimeTag::Critical,
            exponent: p.n as f64,
            has_log_factor: true,
        }
    } else if p.intensity < half_n {
        Regime {
            tag: RegimeTag::SubCritical,
            exponent: 2.0 * (p.n as f64 - p.intensity),
            has_log_factor: false,
        }
    } else {
        Regime {
            tag: RegimeTag::SuperCritical,
            exponent: p.n as f64,
            has_log_factor: false,
        }
    }
}

/// Leading term of Var I as L -> infinity at fixed r:
/// (1/(4 sqrt(pi))) zeta(n+1/2)/(n-1)! r^{2n-1}/(1-r^2)^n L^{-(n-3/2)}.
pub fn var_i_asymp_intensity(p: &Params) -> f64 {
    let n = p.n as f64;
    let zeta = riemann_zeta(n + 0.5).expect("n + 1/2 > 1");
    let pref = zeta / (4.0 * std::f64::consts::PI.sqrt()) * (-ln_factorial(p.n as u64 - 1)).exp();
    pref * p.radius.powi(2 * p.n as i32 - 1) / p.one_minus_r2().powf(n)
        * p.intensity.powf(-(n - 1.5))
}

/// Subcritical boundary constant, L < n/2:
/// (L^2/sqrt(pi)) 2^{n-1}/(4^L (n-1)!) Gamma(n/2-L) Gamma((n+1)/2-L) / Gamma(n-L)^2.
pub fn c_subcritical(n: u32, intensity: f64) -> Result<f64> {
    let nf = n as f64;
    if !(intensity > 0.0 && intensity < nf / 2.0) {
        return Err(Error::domain(
            "c_subcritical",
            format!("need 0 < L < n/2, got L = {intensity}, n = {n}"),
        ));
    }
    let lg = log_gamma(nf / 2.0 - intensity)? + log_gamma((nf + 1.0) / 2.0 - intensity)?
        - 2.0 * log_gamma(nf - intensity)?
        + (nf - 1.0 - 2.0 * intensity) * std::f64::consts::LN_2
        - ln_factorial(n as u64 - 1)
        - 0.5 * std::f64::consts::PI.ln();
    Ok(intensity * intensity * lg.exp())
}

/// Critical boundary constant, L = n/2: (n/2)^2 / ((n-1)! Gamma(n/2)^2).
pub fn c_critical(n: u32) -> f64 {
    let nf = n as f64;
    let lg = -ln_factorial(n as u64 - 1) - 2.0 * log_gamma(nf / 2.0).expect("n >= 2");
    (nf / 2.0) * (nf / 2.0) * lg.exp()
}

pub(crate) fn c_supercritical_parts(n: u32, intensity: f64, tol: f64) -> Result<(f64, f64, u32)> {
    let nf = n as f64;
    if !(intensity > nf / 2.0) {
        return Err(Error::domain(
            "c_supercritical",
            format!("need L > n/2, got L = {intensity}, n = {n}"),
        ));
    }
    // term_k = Gamma(Lk - n/2) Gamma(Lk - (n-1)/2) / Gamma(Lk+1)^2 (Lk + n(n-1)/2),
    // which is 2^n times the gamma_ratio_combination closed form at M = Lk. Terms decay like
    // (Lk)^{-(n+1/2)}; once k is past the pre-asymptotic range the integral
    // test bounds the tail by term_k * k / (n - 1/2).
    let scale = (nf * std::f64::consts::LN_2
        - (4.0f64).ln() - 0.5 * std::f64::consts::PI.ln()
        - ln_factorial(n as u64 - 1))
    .exp()
        * intensity
        * intensity;
    // The k^{-(n+1/2)} decay makes extreme absolute targets cost k ~
    // tol^{-1/(n-1/2)} terms, so the request is floored at 1e-12 of the
    // running value (the f64 summation noise scale anyway).
    let mut sum = 0.0;
    let mut k = 1u32;
    let tail = loop {
        let term = gamma_ratio_combination(intensity * k as f64, n)?;
        sum += term;
        let bound = term * k as f64 / (nf - 0.5);
        if k >= 4 && scale * bound <= tol.max(1e-12 * scale * sum) {
            break scale * bound;
        }
        if k > 5_000_000 {
            return Err(Error::domain(
                "c_supercritical",
                format!("series did not certify tol = {tol}"),
            ));
        }
        k += 1;
    };
    Ok((scale * sum, tail, k))
}

/// Supercritical boundary constant, L > n/2:
/// L^2/(4 sqrt(pi) (n-1)!) sum_{k>=1} Gamma(Lk-n/2) Gamma(Lk-(n-1)/2)
/// / Gamma(Lk+1)^2 (Lk + n(n-1)/2), summed with a certified tail bound.
pub fn c_supercritical(n: u32, intensity: f64, tol: f64) -> Result<f64> {
    Ok(c_supercritical_parts(n, intensity, tol)?.0)
}

/// Leading term of Var I as r -> 1 at fixed L, assembled per regime.
pub fn var_i_asymp_boundary(p: &Params) -> Result<f64> {
    let regime = classify_regime(p);
    let om = p.one_minus_r2();
    let c = match regime.tag {
        RegimeTag::SubCritical => c_subcritical(p.n, p.intensity)?,
        RegimeTag::Critical => c_critical(p.n),
        RegimeTag::SuperCritical => c_supercritical(p.n, p.intensity, 1e-10)?,
    };
    let log_factor = if regime.has_log_factor {
        (1.0 / om).ln()
    } else {
        1.0
    };
    Ok(c * om.powf(-regime.exponent) * log_factor)
}

/// Var I / (E I)^2, the self-averaging ratio; O(L^{-(n+1/2)}) as L grows.
pub fn self_averaging_ratio(p: &Params, tol: f64) -> Result<f64> {
    let vi = var_i_auto(p, tol)?;
    let mean = expected_invariant_volume(p);
    Ok(vi.value / (mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variance::{var_i, Route};

    #[test]
    fn regime_classification() {
        let sub = classify_regime(&Params::new(2, 0.5, 0.5).unwrap());
        assert_eq!(sub.tag, RegimeTag::SubCritical);
        assert!((sub.exponent - 3.0).abs() < 1e-14);
        assert!(!sub.has_log_factor);

        let crit = classify_regime(&Params::new(2, 1.0, 0.5).unwrap());
        assert_eq!(crit.tag, RegimeTag::Critical);
        assert!((crit.exponent - 2.0).abs() < 1e-14);
        assert!(crit.has_log_factor);

        let sup = classify_regime(&Params::new(3, 2.0, 0.5).unwrap());
        assert_eq!(sup.tag, RegimeTag::SuperCritical);
        assert!((sup.exponent - 3.0).abs() < 1e-14);
    }

    #[test]
    fn intensity_law_prefactor_and_scaling() {
        let p1 = Params::new(2, 100.0, 0.5).unwrap();
        let p2 = Params::new(2, 400.0, 0.5).unwrap();
        let s1 = var_i_asymp_intensity(&p1) * p1.intensity.powf(0.5);
        let s2 = var_i_asymp_intensity(&p2) * p2.intensity.powf(0.5);
        assert!((s1 - s2).abs() < 1e-14 * s1.abs());
        // n = 2, r = 0.5 prefactor: zeta(2.5)/(4 sqrt(pi)) * 0.125/0.5625
        let want = riemann_zeta(2.5).unwrap() / (4.0 * std::f64::consts::PI.sqrt()) * 0.125
            / 0.5625;
        assert!((s1 - want).abs() < 1e-13 * want);
    }

    #[test]
    fn intensity_law_ratio_improves_with_l() {
        let p100 = Params::new(2, 100.0, 0.5).unwrap();
        let p400 = Params::new(2, 400.0, 0.5).unwrap();
        let r100 = var_i(&p100, 1e-9, Route::Polar).unwrap().value / var_i_asymp_intensity(&p100);
        let r400 = var_i(&p400, 1e-9, Route::Polar).unwrap().value / var_i_asymp_intensity(&p400);
        assert!((r400 - 1.0).abs() < (r100 - 1.0).abs());
    }

    #[test]
    fn subcritical_constant_reference() {
        // n = 2, L = 1/2 collapses to 1/pi
        let c = c_subcritical(2, 0.5).unwrap();
        assert!((c - 1.0 / std::f64::consts::PI).abs() < 1e-14, "{c}");
        assert!(c_subcritical(2, 1.5).is_err());
        // finite and positive away from the critical point
        for i in 0..50 {
            let n = 2 + (i % 3) as u32;
            let l = 0.03 + (n as f64 / 2.0 - 0.08) * (i as f64 / 49.0);
            let c = c_subcritical(n, l).unwrap();
            assert!(c > 0.0 && c.is_finite(), "n={n} L={l}: {c}");
        }
    }

    #[test]
    fn critical_constant_reference() {
        assert!((c_critical(2) - 1.0).abs() < 1e-14);
        assert!((c_critical(4) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn supercritical_terms_decrease_and_tail_certified() {
        let (n, l) = (2u32, 2.0);
        let mut last = f64::INFINITY;
        for k in 1..=30u32 {
            let term = gamma_ratio_combination(l * k as f64, n).unwrap();
            assert!(term > 0.0);
            if l * k as f64 > n as f64 {
                assert!(term < last, "term not decreasing at k = {k}");
            }
            last = term;
        }
        let (sum, tail, k) = c_supercritical_parts(n, l, 1e-10).unwrap();
        // doubling the summed term count moves the value less than the bound
        let raw_k: f64 = (1..=k).map(|kk| gamma_ratio_combination(l * kk as f64, n).unwrap()).sum();
        let raw_2k: f64 = (1..=2 * k).map(|kk| gamma_ratio_combination(l * kk as f64, n).unwrap()).sum();
        let shift = (raw_2k - raw_k) * (sum / raw_k);
        assert!(shift <= tail, "doubling terms moved {shift} > tail {tail}");
    }

    #[test]
    fn interchange_consistency_n2() {
        // C_super(2, 200) * L^{1/2} * 4 sqrt(pi) Gamma(2) / zeta(2.5) -> 1
        let l = 200.0;
        let c = c_supercritical(2, l, 1e-10).unwrap();
        let val =
            c * l.powf(0.5) * 4.0 * std::f64::consts::PI.sqrt() / riemann_zeta(2.5).unwrap();
        assert!((val - 1.0).abs() < 0.02, "{val}");
    }

    #[test]
    fn boundary_law_assembles_per_regime() {
        let om: f64 = 1.0 - 0.95f64 * 0.95;
        let sup = Params::new(2, 2.0, 0.95).unwrap();
        let want = c_supercritical(2, 2.0, 1e-10).unwrap() / om.powi(2);
        assert!((var_i_asymp_boundary(&sup).unwrap() - want).abs() < 1e-12 * want);

        let crit = Params::new(2, 1.0, 0.95).unwrap();
        let want = c_critical(2) / om.powi(2) * (1.0 / om).ln();
        assert!((var_i_asymp_boundary(&crit).unwrap() - want).abs() < 1e-12 * want);

        let sub = Params::new(2, 0.4, 0.95).unwrap();
        let want = c_subcritical(2, 0.4).unwrap() / om.powf(3.2);
        assert!((var_i_asymp_boundary(&sub).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn variance_smooth_across_critical_intensity() {
        // the asymptotic constants change form at L = n/2, but the finite-r
        // variance is smooth in L
        let below = Params::new(2, 0.999, 0.99).unwrap();
        let above = Params::new(2, 1.001, 0.99).unwrap();
        let vb = var_i(&below, 1e-9, Route::Polar).unwrap().value;
        let va = var_i(&above, 1e-9, Route::Polar).unwrap().value;
        assert!((vb / va - 1.0).abs() < 0.05, "jump: {vb} vs {va}");
    }

    #[test]
    fn self_averaging_decreases_in_intensity() {
        let mut last = f64::INFINITY;
        for l in [5.0, 10.0, 20.0, 40.0] {
            let p = Params::new(2, l, 0.5).unwrap();
            let ratio = self_averaging_ratio(&p, 1e-8).unwrap();
            assert!(ratio > 0.0 && ratio < last, "L = {l}: {ratio}");
            last = ratio;
        }
    }

    #[test]
    fn self_averaging_rate_is_l_to_n_plus_half() {
        // ratio * L^{n+1/2} stays in a fixed band over a 8x span of L
        let mut scaled = Vec::new();
        for l in [50.0, 100.0, 200.0, 400.0] {
            let p = Params::new(2, l, 0.5).unwrap();
            let ratio = self_averaging_ratio(&p, 1e-8).unwrap();
            scaled.push(ratio * l.powf(2.5));
        }
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0f64, f64::max);
        assert!(lo > 0.0 && hi / lo < 1.5, "band [{lo}, {hi}] too wide");
    }
}
