//! Estimate Var E by direct GAF simulation and compare with quadrature.
//!
//! Each sample draws a truncated GAF, then integrates the boundary
//! fluctuation identity over the sphere of radius r: along every Hopf
//! circle the angular average collapses to an exact zero count of the
//! polynomial slice, so only the base points carry Monte Carlo noise.
//!
//! ```bash
//! cargo run --release --example monte_carlo
//! ```

use hypergaf::mc::{truncation_degree, variance_mc};
use hypergaf::variance::{var_e_polar, var_i, Route};
use hypergaf::Params;

fn main() {
    let p = Params::new(2, 2.0, 0.5).expect("valid parameters");
    let trunc_tol = 1e-6;
    let degree = truncation_degree(&p, trunc_tol);
    println!(
        "n = {}, L = {}, r = {}; truncation degree {} (kernel tail below {:.0e})",
        p.n, p.intensity, p.radius, degree, trunc_tol
    );

    let samples = 2000;
    let nodes = 1 << 14;
    let seed = 1;
    let est = variance_mc(&p, degree, samples, nodes, seed).expect("simulation");

    let exact = var_e_polar(&p, 1e-9).expect("quadrature");
    let sigmas = (est.var_e - exact.value).abs() / est.stderr;

    println!("samples = {samples}, nodes per sample = {nodes}, seed = {seed}");
    println!("Var E (simulation): {:.6e} +- {:.1e}", est.var_e, est.stderr);
    println!("Var E (quadrature): {:.6e}", exact.value);
    println!("gap: {sigmas:.2} bootstrap standard errors");
    println!(
        "mean fluctuation {:.2e} +- {:.1e} (centred at 0)",
        est.mean_fluct, est.mean_stderr
    );
    println!(
        "largest angular-integration residual: {:.2e}",
        est.imag_residual_max
    );
    let vi = var_i(&p, 1e-9, Route::Polar).unwrap();
    println!(
        "Var I: simulation {:.6e} vs quadrature {:.6e}",
        est.var_i, vi.value
    );
}
