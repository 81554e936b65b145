//! Scale functions of a Brownian and a compound Poisson model, checked
//! against their closed forms, plus two exit quantities built from them.

use lamperti::scale_functions::{compute_scale, geometric_grid, ruin_laplace, OvershootLaw, ScaleOptions};
use lamperti::{JumpDensity, JumpSpec, LevyModel, ModelSpec};
use std::f64::consts::E;

fn main() -> lamperti::Result<()> {
    let bm = LevyModel::brownian(2.0, 1.0)?;
    let cp = LevyModel::new(ModelSpec {
        sigma2: 0.0,
        mu: 0.5 - 2.0 / E,
        jumps: JumpSpec::CompoundPoisson {
            rate: 1.0,
            density: JumpDensity::Exponential { beta: 1.0 },
        },
    })?;
    let grid = geometric_grid(0.01, 10.0, 12);

    println!("{:>8} {:>16} {:>16} {:>16} {:>16}", "x", "W brownian", "e^x - 1", "W jumps", "4e^x - 2");
    let a = compute_scale(&bm, 0.0, &grid, &ScaleOptions::default())?;
    let b = compute_scale(&cp, 0.0, &grid, &ScaleOptions::default())?;
    for (i, &x) in grid.iter().enumerate() {
        println!(
            "{x:>8.3} {:>16.10} {:>16.10} {:>16.10} {:>16.10}",
            a.values()[i],
            x.exp_m1(),
            b.values()[i],
            4.0 * x.exp() - 2.0
        );
    }

    // two-sided exit from (0, 2) started at 1
    println!("P(exit below before 2 | start 1) = {:.8}", a.exit_down_prob(1.0, 0.0, 2.0)?);
    println!("E[e^(-0.5 τ); τ < ∞] from 1      = {:.8}", ruin_laplace(&bm, 1.0, 0.0, 0.5)?);

    let law = OvershootLaw::new(&cp)?;
    println!("stationary overshoot transform at p: {:.10} (1/(γΦ'(0)) = {:.10})", law.transform(cp.p())?, law.value_at_p());
    Ok(())
}
