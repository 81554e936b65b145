//! Weighted scale functions for R(x) = e^x: the Volterra table, the weighted
//! exit transform and the downward transform of the time-changed process.

use lamperti::omega_scale::{downward_laplace, solve_w_omega, weighted_exit, OmegaGrid, RateFunction};
use lamperti::scale_functions::InversionMethod;
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let rate = RateFunction::exponential(1.0)?;

    for step in [0.02, 0.01, 0.005] {
        let grid = OmegaGrid::new(0.0, 2.0, step)?;
        let table = solve_w_omega(&model, rate.clone(), &grid, InversionMethod::Auto)?;
        let v = weighted_exit(&table, 1.0, 0.0, 2.0)?;
        println!("step {step:<6} E_1[e^(-η); exit below 0 before 2] = {v:.10}");
    }

    let grid = OmegaGrid::new(0.0, 2.0, 0.01)?;
    let table = solve_w_omega(&model, rate.clone(), &grid, InversionMethod::Auto)?;
    let forms = table.check_forms()?;
    println!("row/column form check: {forms:?}");

    for x in [0.5, 1.0, 2.0, 4.0] {
        let d = downward_laplace(&model, &rate, x, 0.0)?;
        println!("E_{x}[e^(-T_0); T_0 < ∞] = {:.8} (tail bound {:.1e})", d.value, d.tail_bound);
    }
    Ok(())
}
