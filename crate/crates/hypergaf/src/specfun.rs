//! Real special functions: log-gamma, gamma ratios, Riemann zeta, the
//! dilogarithm, and the closed-form gamma identities the variance constants
//! are built from. Everything here is pure and allocation-free.

use crate::error::{Error, Result};

/// Stirling correction coefficients B_{2k}/(2k(2k-1)), k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// B_{2j} for the Euler-Maclaurin zeta tail, j = 1..=12.
const BERNOULLI2J: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43_867.0 / 798.0,
    -174_611.0 / 330.0,
    854_513.0 / 138.0,
    -236_364_091.0 / 2730.0,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series for ln Gamma, valid to ~1e-16 relative for x >= 10.
fn log_gamma_stirling(x: f64) -> f64 {
    let mut corr = 0.0;
    let x2 = x * x;
    let mut xp = x;
    for c in STIRLING {
        corr += c / xp;
        xp *= x2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + corr
}

/// Natural log of the Gamma function for x > 0.
///
/// Uses the Stirling series directly for x >= 10 and the recurrence
/// Gamma(x+1) = x Gamma(x) to shift smaller arguments up. Relative error
/// is below 1e-13 on the whole domain.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("log_gamma", format!("x = {x} must be > 0")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x >= 10.0 {
        return Ok(log_gamma_stirling(x));
    }
    // shift into the Stirling range, collecting the product in log space
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += y.ln();
        y += 1.0;
    }
    Ok(log_gamma_stirling(y) - shift)
}

/// Gamma(a)/Gamma(b) for a, b > 0, evaluated as exp(lgamma(a) - lgamma(b)).
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(
            "gamma_ratio",
            format!("arguments must be positive, got ({a}, {b})"),
        ));
    }
    Ok((log_gamma(a)? - log_gamma(b)?).exp())
}

/// ln n! as a convenience wrapper over [`log_gamma`].
pub fn ln_factorial(n: u64) -> f64 {
    log_gamma(n as f64 + 1.0).expect("n + 1 > 0")
}

/// Riemann zeta for real s > 1, by direct summation plus an Euler-Maclaurin
/// tail. The first omitted correction term bounds the remainder for real s,
/// and with N = 64 cutoff and 12 correction terms it is far below 1e-12.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain("riemann_zeta", format!("s = {s} must be > 1")));
    }
    const N: u64 = 64;
    let nf = N as f64;
    let mut sum = 0.0;
    for k in 1..N {
        sum += (k as f64).powf(-s);
    }
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // correction terms B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
    let mut rising = s; // s(s+1)...(s+2j-2), updated per term
    let mut fact = 2.0; // (2j)!
    let mut npow = nf.powf(-s - 1.0); // N^{-s-2j+1}
    for (j, b) in BERNOULLI2J.iter().enumerate() {
        sum += b / fact * rising * npow;
        let tj = 2.0 * (j + 1) as f64;
        rising *= (s + tj - 1.0) * (s + tj);
        fact *= (tj + 1.0) * (tj + 2.0);
        npow /= nf * nf;
    }
    Ok(sum)
}

/// Dilogarithm Li2(x) on [0, 1].
///
/// Direct series for x <= 1/2; the reflection
/// Li2(x) + Li2(1-x) = pi^2/6 - ln x ln(1-x) otherwise, so the series is
/// only ever summed where it converges quickly.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("dilog", format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(std::f64::consts::PI * std::f64::consts::PI / 6.0);
    }
    if x <= 0.5 {
        return Ok(dilog_series(x));
    }
    let pi2_6 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    // ln x as ln_1p(x-1) keeps full precision when x is near 1
    Ok(pi2_6 - (x - 1.0).ln_1p() * (1.0 - x).ln() - dilog_series(1.0 - x))
}

fn dilog_series(x: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&x));
    let mut sum = 0.0;
    let mut xp = x;
    for m in 1..200u32 {
        let term = xp / (m as f64 * m as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        xp *= x;
    }
    sum
}

/// The alternating binomial sum sum_j C(m,j) (-1)^j / (z+j), evaluated through
/// its closed form m! Gamma(z)/Gamma(z+m+1) = (1/z) prod_j j/(z+j).
///
/// The interleaved product keeps every factor O(1), so the result neither
/// overflows nor loses the sign information carried by negative z.
pub fn binom_reciprocal_sum(m: u32, z: f64) -> Result<f64> {
    for j in 0..=m {
        if z + j as f64 == 0.0 {
            return Err(Error::domain(
                "binom_reciprocal_sum",
                format!("pole: z + {j} = 0 at z = {z}"),
            ));
        }
    }
    let mut out = 1.0 / z;
    for j in 1..=m {
        out *= j as f64 / (z + j as f64);
    }
    Ok(out)
}

/// int_0^{pi/2} cos^m(t) dt = (sqrt(pi)/2) Gamma((m+1)/2) / Gamma(m/2 + 1).
pub fn cos_power_integral(m: u32) -> f64 {
    let mf = m as f64;
    let lg = log_gamma((mf + 1.0) / 2.0).expect("positive") - log_gamma(mf / 2.0 + 1.0).expect("positive");
    0.5 * std::f64::consts::PI.sqrt() * lg.exp()
}

/// The closed form
/// 2^{-n} Gamma(M - n/2) Gamma(M - (n-1)/2) / Gamma(M+1)^2 (M + n(n-1)/2),
/// defined for M > n/2; it collapses a three-term combination of gamma
/// ratios and is the summand shape of the supercritical boundary constant.
pub fn gamma_ratio_combination(m_arg: f64, n: u32) -> Result<f64> {
    let nf = n as f64;
    if !(m_arg > nf / 2.0) {
        return Err(Error::domain(
            "gamma_ratio_combination",
            format!("M = {m_arg} must exceed n/2 = {}", nf / 2.0),
        ));
    }
    let lg = log_gamma(m_arg - nf / 2.0)? + log_gamma(m_arg - (nf - 1.0) / 2.0)?
        - 2.0 * log_gamma(m_arg + 1.0)?
        - nf * std::f64::consts::LN_2;
    Ok(lg.exp() * (m_arg + nf * (nf - 1.0) / 2.0))
}
