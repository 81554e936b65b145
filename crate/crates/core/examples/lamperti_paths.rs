//! One path of the Lévy process with jumps, its additive functional and the
//! time-changed branching process, with the passage events it logged.

use lamperti::omega_scale::RateFunction;
use lamperti::simulation::{lamperti_transform, SimConfig, Simulator};
use lamperti::{JumpDensity, JumpSpec, LevyModel, ModelSpec};

fn main() -> lamperti::Result<()> {
    let model = LevyModel::new(ModelSpec {
        sigma2: 1.0,
        mu: 1.0,
        jumps: JumpSpec::CompoundPoisson {
            rate: 1.0,
            density: JumpDensity::Exponential { beta: 2.0 },
        },
    })?;
    let rate = RateFunction::power(1.0, 2.0)?;
    let mut cfg = SimConfig::new(1e-3, 100.0, 0.0, 1e4);
    cfg.seed = 42;
    cfg.levels = vec![2.0, 10.0, 50.0];
    let sim = Simulator::new(&model, &rate, &cfg)?;
    let (path, outcome) = sim.run(1.0, 0)?;
    println!("{} steps, outcome {outcome:?}", path.len());

    let x = lamperti_transform(&path)?;
    let stride = (path.len() / 15).max(1);
    println!("{:>10} {:>12} {:>12}", "η", "ξ", "X(η)");
    for k in (0..path.len()).step_by(stride) {
        println!("{:>10.5} {:>12.5} {:>12.5}", path.eta[k], path.xi[k], x.values[k]);
    }
    for e in &path.events {
        println!("level {:>5}: {} at η = {:.6}", e.level, if e.upward { "up" } else { "down" }, e.eta);
    }
    Ok(())
}
