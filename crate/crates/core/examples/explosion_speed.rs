//! How fast the process blows up: X(T - t) against φ⁻¹(t) in the slow regime
//! and against -log t in the fast one.

use lamperti::explosion::{verify_thm2, VerifyConfig};
use lamperti::omega_scale::RateFunction;
use lamperti::simulation::SimConfig;
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;

    let mut sim = SimConfig::new(0.01, 2000.0, 0.0, 1e6);
    sim.dt_growth = 1.0;
    sim.dt_max = Some(1.0);
    sim.seed = 10;
    let slow = verify_thm2(
        &model,
        &RateFunction::power(1.0, 2.0)?,
        &[0.1, 0.02, 0.005, 0.002],
        &VerifyConfig::new(sim, 1000),
    )?;
    print!("R = (1+x)^2\n{}", slow.to_csv());
    println!("smallest resolvable t: {:?}", slow.smallest_resolvable);

    let mut sim = SimConfig::new(0.01, 60.0, 0.0, 1e5);
    sim.seed = 11;
    let fast = verify_thm2(
        &model,
        &RateFunction::exponential(1.0)?,
        &[1e-2, 1e-4, 1e-8, 1e-16],
        &VerifyConfig::new(sim, 1000),
    )?;
    print!("R = e^x\n{}", fast.to_csv());
    Ok(())
}
