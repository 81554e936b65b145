//! Euler paths of `ξ`, the clock `η(t) = ∫_0^t ω(ξ_s) ds` and the
//! time-changed process `X = ξ∘η⁻¹`.

use super::stepper::Stepper;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::omega_scale::{classify_boundaries, RateFunction, Verdict, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Simulation settings shared by every replicate of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Base time step.
    pub dt: f64,
    /// Small-jump truncation; defaults to the model's value, reduced until
    /// the compensating variance is at most 10% of `σ²`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Level at which an upward-drifting path is handed to the analytic
    /// tail estimate.
    pub x_stop: f64,
    /// Absorption level standing in for 0.
    #[serde(default)]
    pub c_floor: f64,
    /// Censoring horizon in the time of `ξ`.
    pub t_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Step growth exponent `κ`: the step at state `x` is
    /// `dt·max(1, |x|)^κ`, capped at `dt_max`.
    #[serde(default)]
    pub dt_growth: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    /// Brownian-bridge detection of floor crossings between grid points.
    #[serde(default = "yes")]
    pub bridge_down: bool,
    /// Same for crossings of `x_stop`.
    #[serde(default)]
    pub bridge_up: bool,
    /// Levels whose first passages are logged.
    #[serde(default)]
    pub levels: Vec<f64>,
}

fn default_replicates() -> usize {
    1000
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn new(dt: f64, x_stop: f64, c_floor: f64, t_max: f64) -> Self {
        SimConfig {
            dt,
            epsilon: None,
            x_stop,
            c_floor,
            t_max,
            seed: 0,
            replicates: default_replicates(),
            dt_growth: 0.0,
            dt_max: None,
            bridge_down: true,
            bridge_up: false,
            levels: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, detail: String| Err(Error::config(format!("sim.{field}"), detail));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad("epsilon", format!("must be positive, got {e}"));
            }
        }
        if !(self.c_floor >= 0.0 && self.c_floor.is_finite()) {
            return bad("c_floor", format!("must be ≥ 0, got {}", self.c_floor));
        }
        if !(self.x_stop > self.c_floor) {
            return bad("x_stop", format!("must exceed c_floor, got {}", self.x_stop));
        }
        if !(self.t_max > 0.0) {
            return bad("t_max", format!("must be positive, got {}", self.t_max));
        }
        if !(self.dt_growth >= 0.0 && self.dt_growth.is_finite()) {
            return bad("dt_growth", format!("must be ≥ 0, got {}", self.dt_growth));
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt) {
                return bad("dt_max", format!("must be at least dt, got {m}"));
            }
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return bad("levels", "levels must be finite".into());
        }
        Ok(())
    }

    pub(crate) fn step_at(&self, x: f64) -> f64 {
        let h = if self.dt_growth > 0.0 {
            self.dt * x.abs().max(1.0).powf(self.dt_growth)
        } else {
            self.dt
        };
        self.dt_max.map_or(h, |m| h.min(m))
    }
}

/// First passage of `ξ` across a logged level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageEvent {
    pub level: f64,
    pub upward: bool,
    /// Index into the path arrays.
    pub index: usize,
    /// Passage time of `ξ`.
    pub time: f64,
    /// `η` at the passage, i.e. the passage time of `X`.
    pub eta: f64,
    /// `ξ(τ) − level` upward, `level − ξ(τ)` downward.
    pub overshoot: f64,
}

/// A simulated path on its (possibly non-uniform) time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub start: f64,
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    /// Left limit `ξ(t−)` at each grid point (differs from `xi` after a
    /// jump, and at the final point of an absorbed path).
    pub xi_minus: Vec<f64>,
    pub running_max: Vec<f64>,
    pub eta: Vec<f64>,
    pub events: Vec<PassageEvent>,
    /// `Σ |ω(ξ_{k+1}−) − ω(ξ_k)|·h/2`, half the gap between left and right
    /// Riemann sums of `η`.
    pub grid_error: f64,
    /// Continuous-move envelope of each step, for the overshoot check.
    pub envelopes: Vec<f64>,
}

/// How a path ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimOutcome {
    /// Reached the floor; the integral test says `X` hits 0 in finite time.
    Extinct { time: f64 },
    /// Reached the floor, but `X` only tends to 0.
    Extinguished { time: f64 },
    /// Reached `x_stop` with H0 holding; `time` includes the analytic tail.
    Exploded { time: f64, tail: f64, bias_bound: f64 },
    /// Reached `x_stop` but `∫^∞ dy/R(y) = ∞`.
    DriftsToInfinity { time: f64 },
    Censored { time: f64 },
}

impl SimOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            SimOutcome::Extinct { .. } => "extinct",
            SimOutcome::Extinguished { .. } => "extinguished",
            SimOutcome::Exploded { .. } => "exploded",
            SimOutcome::DriftsToInfinity { .. } => "drifts_to_infinity",
            SimOutcome::Censored { .. } => "censored",
        }
    }

    pub fn exploded(&self) -> Option<f64> {
        match *self {
            SimOutcome::Exploded { time, .. } => Some(time),
            _ => None,
        }
    }

    pub fn hit_floor(&self) -> bool {
        matches!(self, SimOutcome::Extinct { .. } | SimOutcome::Extinguished { .. })
    }

    pub fn reached_stop(&self) -> bool {
        matches!(self, SimOutcome::Exploded { .. } | SimOutcome::DriftsToInfinity { .. })
    }
}

/// `T∞ = η(τ_stop) + φ(ξ(τ_stop))` with its error scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplosionEstimate {
    pub time: f64,
    pub tail: f64,
    pub bias_bound: f64,
}

/// A model, rate and configuration ready to produce replicates.
#[derive(Debug, Clone)]
pub struct Simulator {
    rate: RateFunction,
    config: SimConfig,
    stepper: Stepper,
    gamma: f64,
    extinction: Verdict,
    h0: bool,
}

impl Simulator {
    pub fn new(model: &LevyModel, rate: &RateFunction, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let stepper = Stepper::new(model, config.epsilon)?;
        Ok(Simulator {
            rate: rate.clone(),
            config: config.clone(),
            stepper,
            gamma: model.gamma(),
            extinction: classify_boundaries(model, rate)?.extinction,
            h0: rate.tail_integral(config.x_stop).is_finite() && model.gamma() > 0.0 && model.gamma().is_finite(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    /// Stream `replicate` of the experiment seed.
    pub fn rng(&self, replicate: u64) -> ChaCha8Rng {
        replicate_rng(self.config.seed, replicate)
    }

    /// Simulate replicate `replicate` from `start`.
    pub fn run(&self, start: f64, replicate: u64) -> Result<(PathRecord, SimOutcome)> {
        self.run_with(start, &mut self.rng(replicate))
    }

    pub fn run_with(&self, start: f64, rng: &mut ChaCha8Rng) -> Result<(PathRecord, SimOutcome)> {
        let cfg = &self.config;
        if !(start > cfg.c_floor && start.is_finite()) {
            return Err(Error::Domain(format!("start {start} must exceed c_floor {}", cfg.c_floor)));
        }
        let w = |x: f64| self.rate.omega(x.max(cfg.c_floor));
        let mut rec = PathRecord {
            start,
            times: vec![0.0],
            xi: vec![start],
            xi_minus: vec![start],
            running_max: vec![start],
            eta: vec![0.0],
            events: Vec::new(),
            grid_error: 0.0,
            envelopes: vec![0.0],
        };
        let mut pending: Vec<(f64, bool)> = cfg.levels.iter().filter(|&&l| l != start).map(|&l| (l, l > start)).collect();
        let (mut t, mut x, mut eta, mut w_left, mut top) = (0.0, start, 0.0, w(start), start);
        let outcome = loop {
            if start >= cfg.x_stop {
                break self.stop_outcome(eta, x, &rec);
            }
            if t >= cfg.t_max {
                break SimOutcome::Censored { time: eta };
            }
            let h = cfg.step_at(x).min(cfg.t_max - t);
            let xc = x + self.stepper.continuous(rng, h);
            let envelope = self.stepper.envelope(h);
            let floor_frac = if xc <= cfg.c_floor {
                Some((x - cfg.c_floor) / (x - xc))
            } else if cfg.bridge_down && rng.random::<f64>() < self.stepper.bridge_crossing(x, xc, cfg.c_floor, h) {
                Some(0.5)
            } else {
                None
            };
            if let Some(frac) = floor_frac {
                let hk = h * frac;
                let w_right = w(cfg.c_floor);
                eta += 0.5 * hk * (w_left + w_right);
                rec.grid_error += 0.5 * hk * (w_right - w_left).abs();
                t += hk;
                let end = xc.min(cfg.c_floor);
                rec.push(t, end, cfg.c_floor, top, eta, envelope);
                let k = rec.xi.len() - 1;
                for (level, upward) in pending.drain(..) {
                    if !upward && level >= cfg.c_floor {
                        rec.events.push(PassageEvent {
                            level,
                            upward,
                            index: k,
                            time: t,
                            eta,
                            overshoot: (level - end).max(0.0),
                        });
                    }
                }
                break if self.extinction == Verdict::Yes {
                    SimOutcome::Extinct { time: eta }
                } else {
                    SimOutcome::Extinguished { time: eta }
                };
            }
            let w_right = w(xc);
            eta += 0.5 * h * (w_left + w_right);
            rec.grid_error += 0.5 * h * (w_right - w_left).abs();
            t += h;
            let mut xn = xc + self.stepper.jumps(rng, h);
            if xn < cfg.x_stop
                && cfg.bridge_up
                && rng.random::<f64>() < self.stepper.bridge_crossing(x, xc, cfg.x_stop, h)
            {
                xn = cfg.x_stop;
            }
            top = top.max(xn);
            rec.push(t, xn, xc, top, eta, envelope);
            let k = rec.xi.len() - 1;
            pending.retain(|&(level, upward)| {
                let crossed = if upward { xn >= level } else { xn < level };
                if crossed {
                    rec.events.push(PassageEvent {
                        level,
                        upward,
                        index: k,
                        time: t,
                        eta,
                        overshoot: if upward { xn - level } else { level - xn },
                    });
                }
                !crossed
            });
            x = xn;
            w_left = w(x);
            if x >= cfg.x_stop {
                break self.stop_outcome(eta, x, &rec);
            }
        };
        Ok((rec, outcome))
    }

    fn stop_outcome(&self, eta: f64, x: f64, rec: &PathRecord) -> SimOutcome {
        if self.h0 {
            let tail = self.rate.tail_integral(x) / self.gamma;
            SimOutcome::Exploded {
                time: eta + tail,
                tail,
                bias_bound: tail.max(rec.grid_error),
            }
        } else {
            SimOutcome::DriftsToInfinity { time: eta }
        }
    }
}

impl PathRecord {
    fn push(&mut self, t: f64, xi: f64, xi_minus: f64, top: f64, eta: f64, envelope: f64) {
        self.times.push(t);
        self.xi.push(xi);
        self.xi_minus.push(xi_minus);
        self.running_max.push(top);
        self.eta.push(eta);
        self.envelopes.push(envelope);
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `∫ ω(ξ_s) ds` between grid indices `k0 ≤ k1` with the same
    /// trapezoid rule that built `η`, evaluated afresh.
    pub fn functional(&self, weight: &dyn Weight, floor: f64, k0: usize, k1: usize) -> f64 {
        let w = |x: f64| weight.omega(x.max(floor));
        (k0..k1)
            .map(|k| 0.5 * (self.times[k + 1] - self.times[k]) * (w(self.xi[k]) + w(self.xi_minus[k + 1])))
            .sum()
    }

    /// `T∞ − η` at every grid point, as suffix sums of the clock increments
    /// plus `tail`. Unlike `η[last] − η[k]` this keeps full relative
    /// precision when the remaining time is tiny.
    pub fn remaining_clock(&self, weight: &dyn Weight, floor: f64, tail: f64) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut acc = tail;
        out[n - 1] = acc;
        for k in (0..n - 1).rev() {
            acc += self.functional(weight, floor, k, k + 1);
            out[k] = acc;
        }
        out
    }

    /// First logged passage across `level` in the given direction.
    pub fn passage(&self, level: f64, upward: bool) -> Option<&PassageEvent> {
        self.events.iter().find(|e| e.level == level && e.upward == upward)
    }

    /// Largest downward overshoot in excess of the step envelope (≤ 0 when
    /// every downward passage is continuous up to grid resolution).
    pub fn downward_overshoot_excess(&self) -> f64 {
        self.events
            .iter()
            .filter(|e| !e.upward)
            .map(|e| e.overshoot - self.envelopes[e.index])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `ChaCha8` stream `replicate` under `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One path from `start` using stream `replicate` of `config.seed`.
pub fn simulate_path(
    model: &LevyModel,
    rate: &RateFunction,
    config: &SimConfig,
    start: f64,
    replicate: u64,
) -> Result<(PathRecord, SimOutcome)> {
    Simulator::new(model, rate, config)?.run(start, replicate)
}

/// `X_t = ξ(η⁻¹(t))` sampled at the `η`-images of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LampertiPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(level, upward, T_level)`; `T = η(τ)` by construction.
    pub passages: Vec<(f64, bool, f64)>,
}

impl LampertiPath {
    /// Grid index of `X` at time `t` (last grid time `≤ t`).
    pub fn index_at(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0) || t > *self.times.last()? {
            return None;
        }
        Some(self.times.partition_point(|&s| s <= t).saturating_sub(1))
    }

    pub fn at(&self, t: f64) -> Option<f64> {
        self.index_at(t).map(|k| self.values[k])
    }

    /// `inf_{s ≥ t} X_s` over the simulated horizon.
    pub fn infimum_after(&self, t: f64) -> Option<f64> {
        self.index_at(t).map(|k| self.values[k..].iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Time-change a path. Fails if the clock decreases anywhere.
pub fn lamperti_transform(path: &PathRecord) -> Result<LampertiPath> {
    if let Some(k) = path.eta.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::Consistency(format!(
            "additive functional decreases between grid points {k} and {}",
            k + 1
        )));
    }
    Ok(LampertiPath {
        times: path.eta.clone(),
        values: path.xi.clone(),
        passages: path.events.iter().map(|e| (e.level, e.upward, path.eta[e.index])).collect(),
    })
}

/// Explosion time estimate for a path that reached its stopping level.
pub fn estimate_explosion_time(path: &PathRecord, rate: &RateFunction, gamma: f64) -> Result<ExplosionEstimate> {
    let x = *path.xi.last().expect("paths are never empty");
    let eta = *path.eta.last().expect("paths are never empty");
    let tail = rate.phi(x, gamma)?;
    Ok(ExplosionEstimate {
        time: eta + tail,
        tail,
        bias_bound: tail.max(path.grid_error),
    })
}

/// `min ξ_t/ξ̄_t` over the part of the path after `ξ̄` first reaches
/// `threshold`; `None` if it never does.
pub fn running_max_ratio_check(path: &PathRecord, threshold: f64) -> Option<f64> {
    let k0 = path.running_max.iter().position(|&m| m >= threshold)?;
    Some(
        (k0..path.len())
            .map(|k| path.xi[k] / path.running_max[k])
            .fold(f64::INFINITY, f64::min),
    )
}
