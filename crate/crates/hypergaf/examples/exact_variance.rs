//! Compute Var E and Var I by both quadrature representations and show
//! their agreement.
//!
//! ```bash
//! cargo run --release --example exact_variance
//! ```

use hypergaf::variance::{var_e_disk, var_e_polar, var_i, Route};
use hypergaf::Params;

fn main() {
    let p = Params::new(2, 2.0, 0.5).expect("valid parameters");
    let tol = 1e-9;

    let disk = var_e_disk(&p, tol).expect("disk quadrature");
    let polar = var_e_polar(&p, tol).expect("polar quadrature");
    let vi = var_i(&p, tol, Route::Polar).expect("Var I");

    println!("n = {}, L = {}, r = {}", p.n, p.intensity, p.radius);
    println!(
        "Var E (disk route):  {:.12e}   err est {:.1e}, {} evals",
        disk.value, disk.abs_err_est, disk.n_evals
    );
    println!(
        "Var E (polar route): {:.12e}   err est {:.1e}, {} evals",
        polar.value, polar.abs_err_est, polar.n_evals
    );
    println!(
        "relative gap between the two representations: {:.2e}",
        (disk.value - polar.value).abs() / polar.value
    );
    println!("Var I = Var E / (1-r^2)^(2n-2) = {:.12e}", vi.value);

    // the variance grows without bound as the ball fills out
    println!("\n r      Var I");
    for i in 0..6 {
        let r = 0.5 + 0.09 * i as f64;
        let p = Params::new(2, 2.0, r).unwrap();
        let v = var_i(&p, 1e-8, Route::Polar).unwrap();
        println!("{r:.2}   {:.6e}", v.value);
    }
}
