//! Concentration of the remaining time to explosion in the slow regime,
//! R = (1+x)^2: the remaining time over φ(level) tends to 1.

use lamperti::explosion::{verify_thm1, VerifyConfig};
use lamperti::omega_scale::RateFunction;
use lamperti::simulation::SimConfig;
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let rate = RateFunction::power(1.0, 2.0)?;
    let mut sim = SimConfig::new(0.01, 400.0, 0.0, 1e5);
    sim.dt_growth = 1.0;
    sim.dt_max = Some(1.0);
    sim.seed = 8;
    let table = verify_thm1(&model, &rate, &[5.0, 10.0, 20.0, 40.0], &VerifyConfig::new(sim, 2000))?;
    print!("{}", table.to_csv());
    Ok(())
}
