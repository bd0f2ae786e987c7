//! The boundary laws: as r -> 1 the variance blows up at a rate that
//! switches at L = n/2 between
//!   (1-r^2)^{-2(n-L)}            below,
//!   (1-r^2)^{-n} log(1/(1-r^2))  at the critical intensity,
//!   (1-r^2)^{-n}                 above,
//! each with a closed-form constant.
//!
//! ```bash
//! cargo run --release --example boundary_asymptotics
//! ```

use hypergaf::asymptotics::{classify_regime, var_i_asymp_boundary};
use hypergaf::variance::var_i_auto;
use hypergaf::Params;

fn main() {
    let n = 2u32;
    for &l in &[0.4f64, 1.0, 2.0] {
        let regime = classify_regime(&Params::new(n, l, 0.5).unwrap());
        println!(
            "L = {l}: {} regime, blow-up exponent {}{}",
            regime.tag,
            regime.exponent,
            if regime.has_log_factor { " with log factor" } else { "" }
        );
        println!("    r        Var I            leading term     ratio");
        for &r in &[0.95, 0.99, 0.995] {
            let p = Params::new(n, l, r).unwrap();
            let exact = var_i_auto(&p, 1e-9).unwrap().value;
            let asymp = var_i_asymp_boundary(&p).unwrap();
            println!("  {r:.3}   {exact:.8e}   {asymp:.6e}   {:.4}", exact / asymp);
        }
        println!();
    }
    println!("the supercritical and subcritical ratios close on 1 quickly;");
    println!("the critical one converges only at log speed in 1/(1-r^2)");
}
