//! The (w, psi) chart on the unit sphere of C^n: the boundary forms
//! gamma_j become the scalar weights conj(alpha_j) against
//! d psi/(2 pi) x Lebesgue(w)/pi^{n-1}, and the pairing
//! sum_j alpha_j weight_j is identically 1. Integrating it reproduces the
//! normalisation r^{2n-1}/(n-1)! of the boundary measure.
//!
//! ```bash
//! cargo run --release --example sphere_measure
//! ```

use hypergaf::geometry::{gamma_form_weights, sphere_param, SpherePoint};
use num_complex::Complex64;

fn main() {
    let n = 2u32;
    let r: f64 = 0.7;

    let sp = SpherePoint {
        base: vec![Complex64::new(0.3, -0.2)],
        psi: 1.1,
    };
    let alpha = sphere_param(&sp, n).unwrap();
    let weights = gamma_form_weights(&sp, n).unwrap();
    let pairing: Complex64 = alpha.iter().zip(&weights).map(|(a, w)| a * w).sum();
    println!("alpha   = {alpha:?}");
    println!("weights = {weights:?}");
    println!("|alpha|^2 - 1 = {:.2e}", alpha.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0);
    println!("sum_j alpha_j weight_j = {pairing} (identically 1)");

    // midpoint quadrature over (w, psi) of r^{2n-1} * pairing against the
    // chart measure; the answer is the boundary constant r^{2n-1}/(n-1)!
    let m = 256;
    let mut total = 0.0;
    for i in 0..m {
        let rho = (i as f64 + 0.5) / m as f64;
        for j in 0..m {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            let sp = SpherePoint {
                base: vec![Complex64::from_polar(rho, phi)],
                psi: 0.0,
            };
            let alpha = sphere_param(&sp, n).unwrap();
            let wts = gamma_form_weights(&sp, n).unwrap();
            let pairing: Complex64 = alpha.iter().zip(&wts).map(|(a, w)| a * w).sum();
            total += r.powi(2 * n as i32 - 1) * pairing.re * rho;
        }
    }
    total *= (1.0 / m as f64) * (2.0 * std::f64::consts::PI / m as f64) / std::f64::consts::PI;
    let want = r.powi(2 * n as i32 - 1); // r^{2n-1}/(n-1)! with n = 2
    println!("\nboundary measure check at n = 2, r = {r}:");
    println!("quadrature {total:.10}  vs  closed form {want:.10}");
    println!("difference {:.2e}", (total - want).abs());
}
