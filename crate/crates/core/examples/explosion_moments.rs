//! Moments of the explosion time on the event of explosion, for R = (1+x)^2,
//! with their quadrature bounds and the factorial envelope.

use lamperti::explosion::{exp_moment, moment_recursion};
use lamperti::omega_scale::RateFunction;
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let rate = RateFunction::power(1.0, 2.0)?;
    let grid = [0.5, 1.0, 2.0, 5.0, 10.0];
    let tables = moment_recursion(&model, &rate, 3, &grid)?;
    for t in &tables {
        print!("m{}:", t.order);
        for (v, b) in t.values.iter().zip(&t.quadrature_bound) {
            print!("  {v:.7} (±{b:.0e})");
        }
        println!("   within factorial bound: {}", t.within_factorial_bound());
    }
    let e = exp_moment(&model, &rate, 0.5, 1.0)?;
    println!("E_1[e^(0.5 T); T < ∞] ≈ {e:?}");
    Ok(())
}
