//! The fast regime, R = e^x: the normalised remaining time converges in law
//! to an exponential functional of the free Lévy process.

use lamperti::explosion::{sample_limit_law_b, verify_thm1, VerifyConfig};
use lamperti::omega_scale::RateFunction;
use lamperti::simulation::stats::ks_one_sample;
use lamperti::simulation::SimConfig;
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let rate = RateFunction::exponential(1.0)?;
    let mut sim = SimConfig::new(0.01, 60.0, 0.0, 1e5);
    sim.seed = 9;
    let table = verify_thm1(&model, &rate, &[10.0, 20.0, 30.0], &VerifyConfig::new(sim.clone(), 1000))?;
    print!("{}", table.to_csv());

    // for Brownian motion the limit is 1/Exp(1)
    let reference = sample_limit_law_b(&model, 1.0, 2000, &sim, 30.0)?;
    let ks = ks_one_sample(&reference.integral, |x| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 });
    println!("reference sampler vs 1/Exp(1): KS = {ks:.4}");
    Ok(())
}
