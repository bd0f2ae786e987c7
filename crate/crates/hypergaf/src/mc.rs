//! Direct simulation of the hyperbolic GAF: coefficient sampling, series
//! evaluation, and the Stokes boundary-integral estimator of the volume
//! fluctuation, from which Var E and Var I are estimated with bootstrap
//! standard errors. This route shares no code with the quadrature
//! representations and serves as their fully independent check.
//!
//! The boundary integrand decomposes along Hopf circles t -> e^{it} z, where
//! the GAF restricts to a polynomial F(zeta) = f(zeta z) of degree at most
//! the truncation order. The circle average of the log-derivative term is
//! then exactly the number of zeros of F in the unit disk (argument
//! principle), so the angular direction is integrated exactly and the
//! estimator is real by construction; only the base points (w, psi) carry
//! Monte Carlo noise. The recorded imaginary residual is the winding
//! rounding defect, the honest remnant of angular node noise.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{norm_sq, sphere_param, Params, SpherePoint};
use crate::rng::{derive_stream, ShiftedHalton};
use crate::specfun::{ln_factorial, log_gamma};

/// Nodes per Hopf circle in the node-budget accounting.
const CIRCLE_BASE: u32 = 64;

/// Hard floor on |f| at an evaluation node; below it the node is treated as
/// sitting on the zero variety and the circle is resampled.
const F_FLOOR: f64 = 1e-290;

/// A multi-index alpha in N^n with |alpha| = sum of parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub parts: Vec<u32>,
}

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.parts.iter().sum()
    }
}

/// All alpha in N^n with |alpha| <= max_degree, graded (by degree) and
/// lexicographic within each degree. The count is C(max_degree + n, n).
pub fn enumerate_multiindices(n: u32, max_degree: u32) -> Vec<MultiIndex> {
    fn extend(out: &mut Vec<MultiIndex>, prefix: &mut Vec<u32>, remaining: u32, slots: u32) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(MultiIndex {
                parts: prefix.clone(),
            });
            prefix.pop();
            return;
        }
        for head in 0..=remaining {
            prefix.push(head);
            extend(out, prefix, remaining - head, slots - 1);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        extend(&mut out, &mut Vec::new(), degree, n);
    }
    out
}

/// Standard deviation of the coefficient of z^alpha:
/// sqrt(Gamma(L + |alpha|) / (alpha! Gamma(L))), in log space.
pub fn coeff_sd(alpha: &MultiIndex, intensity: f64) -> f64 {
    let m = alpha.degree() as f64;
    let mut lg = log_gamma(intensity + m).expect("L + |alpha| > 0")
        - log_gamma(intensity).expect("L > 0");
    for &part in &alpha.parts {
        lg -= ln_factorial(part as u64);
    }
    (0.5 * lg).exp()
}

/// Smallest truncation degree M whose kernel tail at z.conj(w) = r^2 is
/// below tol relative to the kernel value (1-r^2)^{-L}.
///
/// The tail past M is bounded geometrically by t_{M+1}/(1 - q) with
/// q = max(r^2 (L+M+1)/(M+2), r^2), which dominates every later term ratio.
pub fn truncation_degree(p: &Params, tol: f64) -> u32 {
    let x = p.radius * p.radius;
    let target = tol * (-p.intensity * p.one_minus_r2().ln()).exp();
    let mut term = 1.0; // t_0
    let mut m = 0u32;
    loop {
        let next = term * (p.intensity + m as f64) / (m as f64 + 1.0) * x;
        let q = (x * (p.intensity + m as f64 + 1.0) / (m as f64 + 2.0)).max(x);
        if q < 1.0 && next / (1.0 - q) <= target {
            return m;
        }
        term = next;
        m += 1;
        if m > 100_000 {
            // r < 1 guarantees the geometric bound eventually applies
            unreachable!("truncation bound did not engage");
        }
    }
}

/// The fixed part of a truncated GAF: index set and coefficient scales.
#[derive(Debug)]
pub struct GafBasis {
    pub n: u32,
    pub intensity: f64,
    pub degree: u32,
    pub indices: Vec<MultiIndex>,
    sds: Vec<f64>,
}

impl GafBasis {
    pub fn new(n: u32, intensity: f64, degree: u32) -> Self {
        let indices = enumerate_multiindices(n, degree);
        let sds = indices.iter().map(|a| coeff_sd(a, intensity)).collect();
        GafBasis {
            n,
            intensity,
            degree,
            indices,
            sds,
        }
    }
}

/// One draw of the truncated GAF; the i-th coefficient is a_i * sd_i with a_i
/// complex Gaussian (E|a|^2 = 1, so real and imaginary parts each carry
/// variance 1/2).
#[derive(Debug, Clone)]
pub struct GafSample {
    pub basis: Arc<GafBasis>,
    pub coeffs: Vec<Complex64>,
}

impl GafSample {
    pub fn intensity(&self) -> f64 {
        self.basis.intensity
    }
    pub fn degree(&self) -> u32 {
        self.basis.degree
    }
}

pub fn sample_gaf(p: &Params, degree: u32, stream: &mut ChaCha12Rng) -> GafSample {
    let basis = Arc::new(GafBasis::new(p.n, p.intensity, degree));
    sample_gaf_with_basis(&basis, stream)
}

pub fn sample_gaf_with_basis(basis: &Arc<GafBasis>, stream: &mut ChaCha12Rng) -> GafSample {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs = basis
        .sds
        .iter()
        .map(|sd| {
            let re: f64 = stream.sample(StandardNormal);
            let im: f64 = stream.sample(StandardNormal);
            Complex64::new(re, im) * (inv_sqrt2 * sd)
        })
        .collect();
    GafSample {
        basis: basis.clone(),
        coeffs,
    }
}

/// Powers z_j^d for d = 0..=degree, flattened row-major per coordinate.
fn power_table(z: &[Complex64], degree: u32) -> Vec<Complex64> {
    let cols = degree as usize + 1;
    let mut table = vec![Complex64::new(1.0, 0.0); z.len() * cols];
    for (j, &zj) in z.iter().enumerate() {
        for d in 1..cols {
            table[j * cols + d] = table[j * cols + d - 1] * zj;
        }
    }
    table
}

/// Truncated series value f(z).
pub fn eval_gaf(s: &GafSample, z: &[Complex64]) -> Result<Complex64> {
    if norm_sq(z) >= 1.0 {
        return Err(Error::domain("eval_gaf", "|z| must be < 1"));
    }
    let cols = s.basis.degree as usize + 1;
    let table = power_table(z, s.basis.degree);
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, coeff) in s.basis.indices.iter().zip(&s.coeffs) {
        let mut mono = *coeff;
        for (j, &part) in idx.parts.iter().enumerate() {
            mono *= table[j * cols + part as usize];
        }
        acc += mono;
    }
    Ok(acc)
}

/// Term-wise holomorphic gradient (df/dz_1, ..., df/dz_n).
pub fn eval_gaf_grad(s: &GafSample, z: &[Complex64]) -> Result<Vec<Complex64>> {
    if norm_sq(z) >= 1.0 {
        return Err(Error::domain("eval_gaf_grad", "|z| must be < 1"));
    }
    let n = s.basis.n as usize;
    let cols = s.basis.degree as usize + 1;
    let table = power_table(z, s.basis.degree);
    let mut grad = vec![Complex64::new(0.0, 0.0); n];
    for (idx, coeff) in s.basis.indices.iter().zip(&s.coeffs) {
        for (j, out) in grad.iter_mut().enumerate() {
            let aj = idx.parts[j];
            if aj == 0 {
                continue;
            }
            let mut term = coeff * aj as f64;
            for (l, &part) in idx.parts.iter().enumerate() {
                let d = if l == j { part - 1 } else { part };
                term *= table[l * cols + d as usize];
            }
            *out += term;
        }
    }
    Ok(grad)
}

/// Coefficients of the slice polynomial F(zeta) = f(zeta z0) in zeta;
/// b_m collects all monomials of total degree m.
fn slice_coefficients(s: &GafSample, z0: &[Complex64]) -> Vec<Complex64> {
    let cols = s.basis.degree as usize + 1;
    let table = power_table(z0, s.basis.degree);
    let mut b = vec![Complex64::new(0.0, 0.0); cols];
    for (idx, coeff) in s.basis.indices.iter().zip(&s.coeffs) {
        let mut mono = *coeff;
        for (j, &part) in idx.parts.iter().enumerate() {
            mono *= table[j * cols + part as usize];
        }
        b[idx.degree() as usize] += mono;
    }
    b
}

fn horner_on_circle(b: &[Complex64], theta: f64) -> Complex64 {
    let zeta = Complex64::from_polar(1.0, theta);
    let mut acc = Complex64::new(0.0, 0.0);
    for coeff in b.iter().rev() {
        acc = acc * zeta + coeff;
    }
    acc
}

/// Zeros of the polynomial F inside the unit disk, by certified argument
/// tracking on |zeta| = 1.
///
/// An arc [ta, tb] contributes the principal argument of F(tb)/F(ta) once
/// (tb - ta) sup|F'| <= 0.4 |F(ta)| certifies that F cannot wind within the
/// arc; otherwise the arc is bisected. Returns the winding number and the
/// rounding residual |sum/2pi - round|, or None when a node hits the zero
/// variety (|F| below the floor, or subdivision exhausts its depth).
fn circle_winding(b: &[Complex64]) -> Option<(i64, f64)> {
    let sup_deriv: f64 = b
        .iter()
        .enumerate()
        .map(|(m, c)| m as f64 * c.norm())
        .sum();
    let k0 = (b.len() * 4).max(64);
    let mut total = 0.0;
    // explicit stack of (ta, tb, Fa, Fb, depth)
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut stack: Vec<(f64, f64, Complex64, Complex64, u32)> = Vec::with_capacity(k0 + 64);
    let mut prev = horner_on_circle(b, 0.0);
    if prev.norm() < F_FLOOR {
        return None;
    }
    let first = prev;
    for i in 1..=k0 {
        let tb = two_pi * i as f64 / k0 as f64;
        let fb = if i == k0 {
            first
        } else {
            horner_on_circle(b, tb)
        };
        if fb.norm() < F_FLOOR {
            return None;
        }
        stack.push((two_pi * (i - 1) as f64 / k0 as f64, tb, prev, fb, 0));
        prev = fb;
    }
    while let Some((ta, tb, fa, fb, depth)) = stack.pop() {
        if (tb - ta) * sup_deriv <= 0.4 * fa.norm() {
            total += (fb / fa).arg();
            continue;
        }
        if depth >= 48 {
            return None;
        }
        let tm = 0.5 * (ta + tb);
        let fm = horner_on_circle(b, tm);
        if fm.norm() < F_FLOOR {
            return None;
        }
        stack.push((tm, tb, fm, fb, depth + 1));
        stack.push((ta, tm, fa, fm, depth + 1));
    }
    let turns = total / two_pi;
    let winding = turns.round();
    Some((winding as i64, (turns - winding).abs()))
}

/// One-sample fluctuation estimate and its diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FluctuationEstimate {
    pub value: f64,
    pub imag_residual: f64,
    pub n_circles: u32,
    pub resampled: u32,
}

fn draw_sphere_point(
    halton: &mut ShiftedHalton,
    buf: &mut [f64],
    n: u32,
) -> Result<SpherePoint> {
    let dims = 2 * (n as usize - 1);
    for _attempt in 0..200_000 {
        halton.next_point(buf);
        let nsq: f64 = buf[..dims]
            .iter()
            .map(|&u| {
                let x = 2.0 * u - 1.0;
                x * x
            })
            .sum();
        if nsq < 1.0 {
            let base = (0..n as usize - 1)
                .map(|j| Complex64::new(2.0 * buf[2 * j] - 1.0, 2.0 * buf[2 * j + 1] - 1.0))
                .collect();
            let psi = 2.0 * std::f64::consts::PI * buf[dims];
            return Ok(SpherePoint { base, psi });
        }
    }
    Err(Error::domain(
        "fluctuation_estimate",
        "ball rejection sampling stalled",
    ))
}

/// Core estimator over explicit base points on the sphere of radius r.
/// Returns None for base points whose Hopf circle touches the zero variety.
fn circle_count(s: &GafSample, p: &Params, alpha: &[Complex64]) -> Option<(i64, f64)> {
    let z0: Vec<Complex64> = alpha.iter().map(|a| a * p.radius).collect();
    let b = slice_coefficients(s, &z0);
    circle_winding(&b)
}

/// Estimator over an explicit list of unit base directions on the sphere.
/// Exposed for invariance checks that need control of the node set.
pub fn fluctuation_from_directions(
    s: &GafSample,
    p: &Params,
    alphas: &[Vec<Complex64>],
) -> Result<FluctuationEstimate> {
    let n = p.n;
    let mut windings = 0i64;
    let mut residual = 0.0;
    for alpha in alphas {
        let (w, resid) = circle_count(s, p, alpha).ok_or(Error::DegenerateSample {
            resampled: 1,
            nodes: alphas.len() * CIRCLE_BASE as usize,
        })?;
        windings += w;
        residual += resid;
    }
    let n_circles = alphas.len() as u32;
    let pref = p.radius.powi(2 * n as i32 - 1) * (-ln_factorial(n as u64 - 1)).exp();
    let mean_wind = windings as f64 / n_circles as f64;
    let value = pref
        * (mean_wind / p.radius - p.intensity * p.radius / p.one_minus_r2());
    Ok(FluctuationEstimate {
        value,
        imag_residual: pref * residual / (p.radius * n_circles as f64),
        n_circles,
        resampled: 0,
    })
}

/// Monte Carlo estimate of the Stokes boundary integral
/// int (i/2pi) dbar log|f_normalised|^2 wedge beta_{n-1} over the sphere of
/// radius r, i.e. the fluctuation E_f(r) - E[E_f(r)] of the Euclidean
/// zero-set volume of this sample.
///
/// Base points (w, psi) are scrambled-Halton uniform on B_{n-1} x [0, 2pi);
/// each contributes the exact angular average along its Hopf circle, which
/// is the integer zero count of the polynomial slice. Circles that touch
/// the zero variety (|f| below 1e-290 at a node) are resampled; more than a
/// 0.1% share of the node budget aborts the sample as degenerate.
pub fn fluctuation_estimate(
    s: &GafSample,
    p: &Params,
    nodes: u32,
    stream: &mut ChaCha12Rng,
) -> Result<FluctuationEstimate> {
    if nodes < CIRCLE_BASE {
        return Err(Error::domain(
            "fluctuation_estimate",
            format!("nodes = {nodes} below the minimum {CIRCLE_BASE}"),
        ));
    }
    let n = p.n;
    let n_circles = nodes / CIRCLE_BASE;
    let dims = 2 * (n as usize - 1) + 1;
    let mut halton = ShiftedHalton::new(dims, stream);
    let mut buf = vec![0.0; dims];
    let allowed_resamples = 2u32.max(nodes / 1000 / CIRCLE_BASE);

    let mut windings = 0i64;
    let mut residual = 0.0;
    let mut resampled = 0u32;
    let mut accepted = 0u32;
    while accepted < n_circles {
        let sp = draw_sphere_point(&mut halton, &mut buf, n)?;
        let alpha = sphere_param(&sp, n)?;
        match circle_count(s, p, &alpha) {
            Some((w, resid)) => {
                windings += w;
                residual += resid;
                accepted += 1;
            }
            None => {
                resampled += 1;
                if resampled > allowed_resamples {
                    return Err(Error::DegenerateSample {
                        resampled: resampled as usize,
                        nodes: nodes as usize,
                    });
                }
            }
        }
    }
    let pref = p.radius.powi(2 * n as i32 - 1) * (-ln_factorial(n as u64 - 1)).exp();
    let mean_wind = windings as f64 / n_circles as f64;
    Ok(FluctuationEstimate {
        value: pref * (mean_wind / p.radius - p.intensity * p.radius / p.one_minus_r2()),
        imag_residual: pref * residual / (p.radius * n_circles as f64),
        n_circles,
        resampled,
    })
}

/// The literal node-averaged form of the same boundary integral:
/// mean over scrambled-Halton SpherePoints of
/// r^{2n-1}/(n-1)! sum_j u_j(z) weight_j, with
/// u_j = conj(d_j f / f)(z) - L z_j/(1-|z|^2) and z = r alpha(w, psi).
///
/// Noisier than [`fluctuation_estimate`] in the angular direction; kept as
/// an independent cross-check of the exact circle averaging.
pub fn fluctuation_estimate_nodes(
    s: &GafSample,
    p: &Params,
    nodes: u32,
    stream: &mut ChaCha12Rng,
) -> Result<FluctuationEstimate> {
    if nodes < CIRCLE_BASE {
        return Err(Error::domain(
            "fluctuation_estimate_nodes",
            format!("nodes = {nodes} below the minimum {CIRCLE_BASE}"),
        ));
    }
    let n = p.n;
    let dims = 2 * (n as usize - 1) + 1;
    let mut halton = ShiftedHalton::new(dims, stream);
    let mut buf = vec![0.0; dims];
    let allowed_resamples = 2u32.max(nodes / 1000);
    let om = p.one_minus_r2();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut accepted = 0u32;
    let mut resampled = 0u32;
    while accepted < nodes {
        let sp = draw_sphere_point(&mut halton, &mut buf, n)?;
        let alpha = sphere_param(&sp, n)?;
        let z: Vec<Complex64> = alpha.iter().map(|a| a * p.radius).collect();
        let f = eval_gaf(s, &z)?;
        if f.norm() < F_FLOOR {
            resampled += 1;
            if resampled > allowed_resamples {
                return Err(Error::DegenerateSample {
                    resampled: resampled as usize,
                    nodes: nodes as usize,
                });
            }
            continue;
        }
        let grad = eval_gaf_grad(s, &z)?;
        let mut node = Complex64::new(0.0, 0.0);
        for j in 0..n as usize {
            let u = (grad[j] / f).conj() - p.intensity * z[j] / om;
            node += u * alpha[j].conj();
        }
        acc += node;
        accepted += 1;
    }
    let pref = p.radius.powi(2 * n as i32 - 1) * (-ln_factorial(n as u64 - 1)).exp();
    let mean = acc / nodes as f64;
    Ok(FluctuationEstimate {
        value: pref * mean.re,
        imag_residual: pref * mean.im.abs(),
        n_circles: nodes,
        resampled,
    })
}

/// Variance estimate across independent GAF samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceEstimate {
    /// Sample variance of the Euclidean-volume fluctuation.
    pub var_e: f64,
    /// Bootstrap standard error of `var_e` (1000 resamples).
    pub stderr: f64,
    /// Samples that entered the estimate.
    pub n_samples: u32,
    /// Mean fluctuation; centred at 0 up to Monte Carlo noise.
    pub mean_fluct: f64,
    /// Standard error of `mean_fluct`.
    pub mean_stderr: f64,
    /// Largest per-sample angular-integration residual.
    pub imag_residual_max: f64,
    /// Var I = Var E / (1-r^2)^{2n-2}.
    pub var_i: f64,
    /// Degenerate samples excluded from the estimate.
    pub n_degenerate: u32,
    /// Truncation degree used for the samples.
    pub degree: u32,
}

/// Estimate Var E (and Var I) from `n_samples` i.i.d. truncated GAF draws,
/// each integrated over `nodes` boundary nodes.
///
/// Sample i derives its coefficient stream from (seed, 1, i) and its node
/// stream from (seed, 2, i), so the result is bitwise independent of thread
/// scheduling; the bootstrap uses its own stream (seed, 3).
pub fn variance_mc(
    p: &Params,
    degree: u32,
    n_samples: u32,
    nodes: u32,
    seed: u64,
) -> Result<VarianceEstimate> {
    if n_samples < 100 {
        return Err(Error::domain(
            "variance_mc",
            format!("n_samples = {n_samples} below the minimum 100"),
        ));
    }
    let basis = Arc::new(GafBasis::new(p.n, p.intensity, degree));
    let outcomes: Vec<Result<FluctuationEstimate>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut coeff_stream = derive_stream(seed, &[1, i as u64]);
            let sample = sample_gaf_with_basis(&basis, &mut coeff_stream);
            let mut node_stream = derive_stream(seed, &[2, i as u64]);
            fluctuation_estimate(&sample, p, nodes, &mut node_stream)
        })
        .collect();

    let mut flucts = Vec::with_capacity(n_samples as usize);
    let mut n_degenerate = 0u32;
    let mut imag_residual_max = 0.0f64;
    for outcome in outcomes {
        match outcome {
            Ok(est) => {
                flucts.push(est.value);
                imag_residual_max = imag_residual_max.max(est.imag_residual);
            }
            Err(Error::DegenerateSample { .. }) => n_degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    if flucts.len() < 2 {
        return Err(Error::DegenerateSample {
            resampled: n_degenerate as usize,
            nodes: nodes as usize,
        });
    }

    let n = flucts.len() as f64;
    let mean: f64 = flucts.iter().sum::<f64>() / n;
    let var: f64 = flucts.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let mean_stderr = (var / n).sqrt();

    // nonparametric bootstrap of the variance
    let mut boot_stream = derive_stream(seed, &[3]);
    const B: usize = 1000;
    let mut boot_vars = Vec::with_capacity(B);
    for _ in 0..B {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..flucts.len() {
            let x = flucts[boot_stream.gen_range(0..flucts.len())];
            s += x;
            s2 += x * x;
        }
        let bm = s / n;
        boot_vars.push((s2 / n - bm * bm) * n / (n - 1.0));
    }
    let bmean: f64 = boot_vars.iter().sum::<f64>() / B as f64;
    let stderr = (boot_vars
        .iter()
        .map(|v| (v - bmean) * (v - bmean))
        .sum::<f64>()
        / (B as f64 - 1.0))
        .sqrt();

    Ok(VarianceEstimate {
        var_e: var,
        stderr,
        n_samples: flucts.len() as u32,
        mean_fluct: mean,
        mean_stderr,
        imag_residual_max,
        var_i: var / p.one_minus_r2().powi(2 * p.n as i32 - 2),
        n_degenerate,
        degree,
    })
}
