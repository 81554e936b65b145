//! Monte Carlo exit probabilities compared with their scale-function values.

use lamperti::omega_scale::{solve_w_omega, weighted_exit, OmegaGrid, RateFunction};
use lamperti::scale_functions::{compute_scale, InversionMethod, ScaleOptions};
use lamperti::simulation::{monte_carlo, Estimator, ExperimentSpec, SimConfig};
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let mut cfg = SimConfig::new(1e-3, 2.0, 0.0, 1e3);
    cfg.seed = 1;
    cfg.replicates = 5000;
    cfg.bridge_up = true;

    let exact = compute_scale(&model, 0.0, &[0.0, 1.0, 2.0], &ScaleOptions::default())?.exit_down_prob(1.0, 0.0, 2.0)?;
    let spec = ExperimentSpec {
        estimator: Estimator::ExitBelow { upper: 2.0 },
        start: 1.0,
        condition_on_explosion: false,
    };
    let flat = RateFunction::constant(1.0)?;
    let s = monte_carlo(&model, &flat, &spec, &cfg)?.summary.expect("non-empty");
    println!("exit below:    MC {:.5} ± {:.5}   exact {exact:.5}", s.mean, s.half_width());

    let rate = RateFunction::exponential(1.0)?;
    let table = solve_w_omega(&model, rate.clone(), &OmegaGrid::new(0.0, 2.0, 1e-3)?, InversionMethod::Auto)?;
    let volterra = weighted_exit(&table, 1.0, 0.0, 2.0)?;
    let spec = ExperimentSpec {
        estimator: Estimator::WeightedExit { upper: 2.0 },
        ..spec
    };
    let s = monte_carlo(&model, &rate, &spec, &cfg)?.summary.expect("non-empty");
    println!("weighted exit: MC {:.5} ± {:.5}   Volterra {volterra:.5}", s.mean, s.half_width());
    Ok(())
}
