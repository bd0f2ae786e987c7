//! Adaptive quadrature building blocks: Gauss-Kronrod 15(7) panels, a 1-D
//! adaptive integrator, Gauss-Legendre rules of arbitrary order, and an
//! adaptive 2-D integrator over the unit disk against the normalised area
//! measure dm/pi. Panel refinement is driven by a deterministic worst-first
//! queue, and final sums are accumulated in creation order so results are
//! bitwise reproducible for a given tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A quadrature value with its error estimate and evaluation count.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err_est: f64,
    pub n_evals: u64,
}

// 15-point Kronrod abscissae (positive half) with the embedded 7-point
// Gauss rule at the odd indices. Standard QUADPACK qk15 constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Evaluate the GK15 pair on [a, b]; returns (kronrod, |kronrod - gauss|).
/// All nodes are interior, so endpoint singularities are never touched.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        resk += WGK[i] * fsum;
        if i % 2 == 1 {
            resg += WG[i / 2] * fsum;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

#[derive(Debug)]
struct Panel1 {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    seq: u64,
}

impl PartialEq for Panel1 {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.seq == other.seq
    }
}
impl Eq for Panel1 {}
impl PartialOrd for Panel1 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel1 {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on error, ties broken by oldest panel first
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Adaptive GK15 integration of `f` over [a, b].
///
/// Stops when the summed error estimate drops below
/// max(tol_abs, tol_rel * |value|); exceeding `max_evals` reports the best
/// estimate through [`Error::QuadBudget`].
pub fn adaptive_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol_rel: f64,
    tol_abs: f64,
    max_evals: u64,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut panels: Vec<(u64, f64, f64)> = Vec::new(); // (seq, value, err), final sums
    let mut n_evals = 0u64;
    let mut seq = 0u64;
    let push = |heap: &mut BinaryHeap<Panel1>, f: &mut F, a: f64, b: f64, seq: &mut u64, n_evals: &mut u64| {
        let (value, err) = gk15(f, a, b);
        *n_evals += 15;
        heap.push(Panel1 {
            a,
            b,
            value,
            err,
            seq: *seq,
        });
        *seq += 1;
    };
    push(&mut heap, &mut f, a, b, &mut seq, &mut n_evals);

    loop {
        let (mut sum, mut errsum) = (0.0, 0.0);
        for p in heap.iter() {
            sum += p.value;
            errsum += p.err;
        }
        if errsum <= tol_abs.max(tol_rel * sum.abs()) {
            // deterministic final accumulation in panel creation order
            panels.extend(heap.iter().map(|p| (p.seq, p.value, p.err)));
            panels.sort_by_key(|t| t.0);
            let value = panels.iter().map(|t| t.1).sum();
            let abs_err_est = panels.iter().map(|t| t.2).sum();
            return Ok(QuadResult {
                value,
                abs_err_est,
                n_evals,
            });
        }
        if n_evals + 30 > max_evals {
            return Err(Error::QuadBudget {
                value: sum,
                abs_err_est: errsum,
                n_evals,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; accept as converged
            heap.push(worst);
            panels.extend(heap.iter().map(|p| (p.seq, p.value, p.err)));
            panels.sort_by_key(|t| t.0);
            let value = panels.iter().map(|t| t.1).sum();
            let abs_err_est = panels.iter().map(|t| t.2).sum();
            return Ok(QuadResult {
                value,
                abs_err_est,
                n_evals,
            });
        }
        push(&mut heap, &mut f, worst.a, mid, &mut seq, &mut n_evals);
        push(&mut heap, &mut f, mid, worst.b, &mut seq, &mut n_evals);
    }
}

/// Nodes and weights of a Gauss-Legendre rule on [-1, 1].
pub type GaussRule = (Vec<f64>, Vec<f64>);

/// Gauss-Legendre rule of the given order, by Newton iteration on the
/// Legendre recurrence. Cached for the orders used by the inner integrals.
pub fn gauss_legendre(order: usize) -> &'static GaussRule {
    static CACHE: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static GaussRule>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(std::collections::HashMap::new()));
    let mut guard = cache.lock().expect("gl cache poisoned");
    if let Some(rule) = guard.get(&order) {
        return rule;
    }
    let rule: &'static GaussRule = Box::leak(Box::new(compute_gauss_legendre(order)));
    guard.insert(order, rule);
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-flavoured initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug)]
struct Panel2 {
    bounds: [f64; 4], // rho_lo, rho_hi, phi_lo, phi_hi
    value: f64,
    err: f64,
    seq: u64,
}

impl PartialEq for Panel2 {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.seq == other.seq
    }
}
impl Eq for Panel2 {}
impl PartialOrd for Panel2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel2 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Tensor GK15 x GK15 on [r0,r1] x [p0,p1] in polar coordinates, integrating
/// f(w) rho / pi. The error estimate compares the Kronrod tensor with the
/// embedded 7x7 Gauss tensor on the same evaluations.
fn disk_panel<F: FnMut(Complex64) -> f64>(
    f: &mut F,
    bounds: [f64; 4],
) -> (f64, f64, u64) {
    let [r0, r1, p0, p1] = bounds;
    let (rc, rh) = (0.5 * (r0 + r1), 0.5 * (r1 - r0));
    let (pc, ph) = (0.5 * (p0 + p1), 0.5 * (p1 - p0));
    // 15 abscissae per axis: index 0..15 maps to +-XGK
    let mut xs = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for i in 0..7 {
        xs[i] = -XGK[i];
        xs[14 - i] = XGK[i];
        wk[i] = WGK[i];
        wk[14 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[14 - i] = WG[i / 2];
        }
    }
    xs[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];

    let mut resk = 0.0;
    let mut resg = 0.0;
    for (i, xi) in xs.iter().enumerate() {
        let rho = rc + rh * xi;
        let mut row_k = 0.0;
        let mut row_g = 0.0;
        for (j, xj) in xs.iter().enumerate() {
            let phi = pc + ph * xj;
            let w = Complex64::from_polar(rho, phi);
            let v = f(w) * rho / std::f64::consts::PI;
            row_k += wk[j] * v;
            row_g += wg[j] * v;
        }
        resk += wk[i] * row_k;
        resg += wg[i] * row_g;
    }
    let scale = rh * ph;
    (resk * scale, ((resk - resg) * scale).abs(), 225)
}

/// Adaptive integration of `f` over the unit disk against dm/pi.
///
/// Refinement is worst-panel-first on rectangles in (rho, phi); panels near
/// the boundary point w = 1 end up subdivided most since that is where the
/// variance integrands concentrate. Nodes are interior so w = 1 itself is
/// never evaluated.
pub fn integrate_disk<F: FnMut(Complex64) -> f64>(mut f: F, tol_rel: f64) -> Result<QuadResult> {
    integrate_disk_budget(&mut f, tol_rel, 40_000_000)
}

pub fn integrate_disk_budget<F: FnMut(Complex64) -> f64>(
    f: &mut F,
    tol_rel: f64,
    max_evals: u64,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut n_evals = 0u64;
    let mut seq = 0u64;
    let pi = std::f64::consts::PI;
    // initial 2 x 4 grid, with phi = 0 (the direction of w = 1) on a panel
    // edge so early refinement can localise there
    for (r0, r1) in [(0.0, 0.5), (0.5, 1.0)] {
        for (p0, p1) in [(-pi, -0.5 * pi), (-0.5 * pi, 0.0), (0.0, 0.5 * pi), (0.5 * pi, pi)] {
            let bounds = [r0, r1, p0, p1];
            let (value, err, ne) = disk_panel(f, bounds);
            n_evals += ne;
            heap.push(Panel2 {
                bounds,
                value,
                err,
                seq,
            });
            seq += 1;
        }
    }

    loop {
        let (mut sum, mut errsum) = (0.0, 0.0);
        for p in heap.iter() {
            sum += p.value;
            errsum += p.err;
        }
        if errsum <= tol_rel * sum.abs() || n_evals + 450 > max_evals {
            let mut panels: Vec<(u64, f64, f64)> =
                heap.iter().map(|p| (p.seq, p.value, p.err)).collect();
            panels.sort_by_key(|t| t.0);
            let value: f64 = panels.iter().map(|t| t.1).sum();
            let abs_err_est: f64 = panels.iter().map(|t| t.2).sum();
            if errsum <= tol_rel * sum.abs() {
                return Ok(QuadResult {
                    value,
                    abs_err_est,
                    n_evals,
                });
            }
            return Err(Error::QuadBudget {
                value,
                abs_err_est,
                n_evals,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let [r0, r1, p0, p1] = worst.bounds;
        // split the axis that is wider relative to its initial extent
        let (ba, bb) = if (r1 - r0) * 2.0 * pi >= (p1 - p0) {
            let m = 0.5 * (r0 + r1);
            ([r0, m, p0, p1], [m, r1, p0, p1])
        } else {
            let m = 0.5 * (p0 + p1);
            ([r0, r1, p0, m], [r0, r1, m, p1])
        };
        for bounds in [ba, bb] {
            let (value, err, ne) = disk_panel(f, bounds);
            n_evals += ne;
            heap.push(Panel2 {
                bounds,
                value,
                err,
                seq,
            });
            seq += 1;
        }
    }
}
