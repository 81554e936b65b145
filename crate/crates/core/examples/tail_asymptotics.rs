//! The tail clock φ, its inverse and the tail ratios for a power and an
//! exponential rate.

use lamperti::explosion::{phi_and_inverse, prop46_checks};
use lamperti::omega_scale::RateFunction;

fn main() -> lamperti::Result<()> {
    for (name, rate, alpha) in [
        ("(1+x)^2", RateFunction::power(1.0, 2.0)?, 1.0),
        ("e^x", RateFunction::exponential(1.0)?, 0.5),
    ] {
        let phi = phi_and_inverse(&rate, 1.0)?;
        println!("R = {name}");
        for x in [1.0, 10.0, 100.0] {
            let t = phi.phi(x);
            println!("  φ({x}) = {t:.6e}, φ⁻¹(φ({x})) = {:.6}", phi.inverse(t)?);
        }
        let t = prop46_checks(&rate, 1.0, alpha, &[10.0, 20.0, 40.0, 80.0])?;
        for r in &t.rows {
            println!("  {:?} at {:.3e}: ratio {:.6} {}", r.case, r.argument, r.ratio, r.double_ratio.map_or(String::new(), |d| format!("double {d:.6}")));
        }
        println!("  λ = {}, trend ok: {}", t.lambda, t.trend_ok);
    }
    Ok(())
}
