//! Replicated path experiments with optional conditioning on explosion.

use super::path::{PathRecord, SimConfig, SimOutcome, Simulator};
use super::stats::Summary;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::omega_scale::RateFunction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-path quantity averaged by [`monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    /// `1{ξ reaches c_floor}`.
    HitFloor,
    /// `1{τ_c⁻ < τ_b⁺}` with `b = upper` (the run stops at `upper`).
    ExitBelow { upper: f64 },
    /// `e^{−η(τ_c⁻)} 1{τ_c⁻ < τ_b⁺}`.
    WeightedExit { upper: f64 },
    /// `T∞⁺ 1{T∞⁺ < ∞}`, or `T∞⁺` alone under conditioning.
    ExplosionTime,
    /// `1{reached x_stop}`.
    ReachStop,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::HitFloor => "hit_floor",
            Estimator::ExitBelow { .. } => "exit_below",
            Estimator::WeightedExit { .. } => "weighted_exit",
            Estimator::ExplosionTime => "explosion_time",
            Estimator::ReachStop => "reach_stop",
        }
    }

    fn upper(&self) -> Option<f64> {
        match *self {
            Estimator::ExitBelow { upper } | Estimator::WeightedExit { upper } => Some(upper),
            _ => None,
        }
    }

    fn value(&self, outcome: &SimOutcome) -> f64 {
        match (self, outcome) {
            (Estimator::HitFloor | Estimator::ExitBelow { .. }, o) => f64::from(u8::from(o.hit_floor())),
            (Estimator::WeightedExit { .. }, SimOutcome::Extinct { time } | SimOutcome::Extinguished { time }) => {
                (-time).exp()
            }
            (Estimator::WeightedExit { .. }, _) => 0.0,
            (Estimator::ExplosionTime, o) => o.exploded().unwrap_or(0.0),
            (Estimator::ReachStop, o) => f64::from(u8::from(o.reached_stop())),
        }
    }
}

/// What to estimate and from where.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub estimator: Estimator,
    pub start: f64,
    /// Keep only paths that reach `x_stop` before the floor.
    #[serde(default)]
    pub condition_on_explosion: bool,
}

/// Result of a replicated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub estimator: String,
    pub replicates: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub conditioning: Option<String>,
    /// `None` when no path was accepted.
    pub summary: Option<Summary>,
    pub seed: u64,
    /// `e^{−p·x_stop}`: size of the error made by treating "reached
    /// `x_stop`" as "never reaches 0".
    pub conditioning_error: Option<f64>,
}

/// Run `f` on replicates `0..n` in parallel; results come back in
/// replicate order.
pub fn run_replicates<T, F>(sim: &Simulator, start: f64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&PathRecord, &SimOutcome) -> T + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let (path, outcome) = sim.run(start, rep)?;
            Ok(f(&path, &outcome))
        })
        .collect()
}

pub fn monte_carlo(
    model: &LevyModel,
    rate: &RateFunction,
    spec: &ExperimentSpec,
    config: &SimConfig,
) -> Result<MonteCarloReport> {
    if config.replicates < 2 {
        return Err(Error::config("sim.replicates", "need at least 2 replicates"));
    }
    let mut cfg = config.clone();
    if let Some(b) = spec.estimator.upper() {
        if !(b > spec.start) {
            return Err(Error::Domain(format!("upper level {b} must exceed the start {}", spec.start)));
        }
        cfg.x_stop = b;
    }
    let sim = Simulator::new(model, rate, &cfg)?;
    let est = spec.estimator;
    let cond = spec.condition_on_explosion;
    let values: Vec<Option<f64>> = run_replicates(&sim, spec.start, cfg.replicates, |_, o| {
        if cond && !o.reached_stop() {
            None
        } else {
            Some(est.value(o))
        }
    })?;
    let kept: Vec<f64> = values.into_iter().flatten().collect();
    let p = model.p();
    Ok(MonteCarloReport {
        estimator: est.name().to_string(),
        replicates: cfg.replicates,
        accepted: kept.len(),
        acceptance_rate: kept.len() as f64 / cfg.replicates as f64,
        conditioning: cond.then(|| format!("reached x_stop = {} before c_floor = {}", cfg.x_stop, cfg.c_floor)),
        summary: Summary::of(&kept),
        seed: cfg.seed,
        conditioning_error: cond.then(|| (-p * (cfg.x_stop - cfg.c_floor)).exp()),
    })
}
