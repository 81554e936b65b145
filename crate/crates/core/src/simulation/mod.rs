//! Path simulation of `ξ`, the additive functional `η` and the Lamperti
//! time change, with replicated Monte Carlo experiments.

mod monte_carlo;
mod path;
pub mod stats;
mod stepper;

pub use monte_carlo::{monte_carlo, run_replicates, Estimator, ExperimentSpec, MonteCarloReport};
pub use path::{
    estimate_explosion_time, lamperti_transform, replicate_rng, running_max_ratio_check, simulate_path,
    ExplosionEstimate, LampertiPath, PassageEvent, PathRecord, SimConfig, SimOutcome, Simulator,
};
pub use stepper::{default_epsilon, Stepper};
