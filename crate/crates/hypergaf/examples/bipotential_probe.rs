//! The two-point potential rho_L = Li2(theta^L) and its mixed Wirtinger
//! derivative, validated two ways: against Richardson-extrapolated finite
//! differences at interior pairs, and against its sphere-restricted closed
//! form on |z| = |w| = r.
//!
//! ```bash
//! cargo run --release --example bipotential_probe
//! ```

use hypergaf::bipotential::{mixed_derivative, mixed_derivative_sphere, rho, PointPair};
use hypergaf::geometry::norm_sq;
use hypergaf::Params;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() {
    let intensity = 1.5;
    let z = vec![c(0.30, 0.10), c(-0.20, 0.25)];
    let w = vec![c(-0.10, 0.35), c(0.15, -0.05)];
    let pp = PointPair::new(z.clone(), w.clone()).unwrap();

    println!("rho_L(z, w) = {:.12}", rho(&pp, intensity).unwrap());

    // finite-difference probe of d^2 rho / d conj(z_1) d conj(w_1)
    let closed = mixed_derivative(&pp, intensity, 0, 0).unwrap();
    let h = 1e-4;
    let rho_at = |zz: &[Complex64], ww: &[Complex64]| {
        rho(&PointPair::new(zz.to_vec(), ww.to_vec()).unwrap(), intensity).unwrap()
    };
    let second = |dz_im: bool, dw_im: bool, h: f64| {
        let eval = |sz: f64, sw: f64| {
            let mut zz = z.clone();
            let mut ww = w.clone();
            zz[0] += if dz_im { c(0.0, sz) } else { c(sz, 0.0) };
            ww[0] += if dw_im { c(0.0, sw) } else { c(sw, 0.0) };
            rho_at(&zz, &ww)
        };
        (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
    };
    let rich = |a: bool, b: bool| (4.0 * second(a, b, h / 2.0) - second(a, b, h)) / 3.0;
    let fd = 0.25
        * c(
            rich(false, false) - rich(true, true),
            rich(false, true) + rich(true, false),
        );
    println!("mixed derivative, closed form:      {closed:.12e}");
    println!("mixed derivative, Richardson FD:    {fd:.12e}");
    println!(
        "relative difference:                {:.2e}",
        (closed - fd).norm() / closed.norm()
    );

    // the same derivative on sphere points, against the restricted formula
    let p = Params::new(2, intensity, 0.6).unwrap();
    let nz = norm_sq(&z).sqrt();
    let nw = norm_sq(&w).sqrt();
    let xi: Vec<Complex64> = z.iter().map(|x| x / nz).collect();
    let eta: Vec<Complex64> = w.iter().map(|x| x / nw).collect();
    let on_sphere = PointPair::new(
        xi.iter().map(|x| x * p.radius).collect(),
        eta.iter().map(|x| x * p.radius).collect(),
    )
    .unwrap();
    let general = mixed_derivative(&on_sphere, p.intensity, 0, 1).unwrap();
    let sphere = mixed_derivative_sphere(&xi, &eta, &p, 0, 1).unwrap();
    println!("\nsphere restriction (general form):  {general:.12e}");
    println!("sphere restriction (closed form):   {sphere:.12e}");
    println!(
        "relative difference:                {:.2e}",
        (general - sphere).norm() / general.norm()
    );
}
