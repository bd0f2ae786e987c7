//! The large-intensity law: at fixed radius,
//! Var I ~ zeta(n+1/2)/(4 sqrt(pi) (n-1)!) r^{2n-1}/(1-r^2)^n L^{-(n-3/2)},
//! and the self-averaging ratio Var I / (E I)^2 decays like L^{-(n+1/2)}.
//!
//! ```bash
//! cargo run --release --example intensity_asymptotics
//! ```

use hypergaf::asymptotics::{self_averaging_ratio, var_i_asymp_intensity};
use hypergaf::variance::{var_i, Route};
use hypergaf::Params;

fn main() {
    let (n, r) = (2u32, 0.5f64);
    println!("n = {n}, r = {r}");
    println!("    L     Var I (quadrature)   leading term    ratio    VarI/(EI)^2 * L^2.5");
    for &l in &[25.0, 50.0, 100.0, 200.0, 400.0] {
        let p = Params::new(n, l, r).unwrap();
        let exact = var_i(&p, 1e-9, Route::Polar).unwrap().value;
        let asymp = var_i_asymp_intensity(&p);
        let sa = self_averaging_ratio(&p, 1e-9).unwrap() * l.powf(n as f64 + 0.5);
        println!(
            "{l:>6}   {exact:.10e}   {asymp:.6e}   {:.5}   {sa:.5}",
            exact / asymp
        );
    }
    println!("\nthe ratio column approaches 1; the last column stabilises,");
    println!("showing fluctuations of order L^{{-(n+1/2)}} relative to the mean squared");
}
