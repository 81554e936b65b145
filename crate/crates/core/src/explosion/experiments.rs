//! Monte Carlo checks of the explosion-time limit theorems.

use super::regime::{estimate_lambda, phi_and_inverse, PhiFunctions, Regime, RegimeReport};
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::omega_scale::{classify_boundaries, RateFunction, Verdict};
use crate::simulation::stats::{ks_two_sample, quantile_sorted, Summary};
use crate::simulation::{replicate_rng, PathRecord, SimConfig, SimOutcome, Simulator, Stepper};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Offset separating the overshoot streams from the integral streams of
/// the reference sampler.
const OVERSHOOT_STREAM: u64 = 1 << 40;
/// Replicates simulated per batch while collecting exploding paths.
const BATCH: usize = 1024;

/// Settings for the conditioned experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub sim: SimConfig,
    #[serde(default = "one")]
    pub start: f64,
    /// Exploding paths to collect.
    pub accepted: usize,
    /// Give up after this many replicates.
    #[serde(default = "default_max_replicates")]
    pub max_replicates: usize,
    /// Settings of the reference sampler (fast regime); defaults to `sim`
    /// with the seed below.
    #[serde(default)]
    pub reference: Option<SimConfig>,
    #[serde(default = "default_reference_seed")]
    pub reference_seed: u64,
    #[serde(default)]
    pub reference_samples: Option<usize>,
    /// Tolerance in `P(|ratio − 1| > threshold)`.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn one() -> f64 {
    1.0
}

fn default_max_replicates() -> usize {
    1_000_000
}

fn default_reference_seed() -> u64 {
    0x5eed
}

fn default_threshold() -> f64 {
    0.25
}

impl VerifyConfig {
    pub fn new(sim: SimConfig, accepted: usize) -> Self {
        VerifyConfig {
            sim,
            start: 1.0,
            accepted,
            max_replicates: default_max_replicates(),
            reference: None,
            reference_seed: default_reference_seed(),
            reference_samples: None,
            threshold: default_threshold(),
        }
    }
}

/// Draws from the fast-regime limit laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitLawSamples {
    /// `λγ∫_0^∞ e^{−λξ_t} dt` for `ξ` started at 0.
    pub integral: Vec<f64>,
    /// `e^{−λϱ}` with `ϱ` the jump overshoot over `x_ref`.
    pub overshoot_factor: Vec<f64>,
    /// Samples dropped because the path was censored or its tail bound
    /// exceeded `1e−6` of the value.
    pub rejected: usize,
    /// Largest `e^{−λξ(t_cut)}` among kept samples: the neglected part of
    /// the integral relative to the drift-only tail.
    pub max_tail_bound: f64,
}

/// Free path from 0 until `ξ ≥ level`: returns `(∫ e^{−λξ}, ξ_end, jump
/// overshoot)` or `None` if censored.
fn free_run(stepper: &Stepper, cfg: &SimConfig, lambda: f64, level: f64, rng: &mut ChaCha8Rng) -> Option<(f64, f64, f64)> {
    let (mut t, mut x, mut acc) = (0.0, 0.0f64, 0.0);
    let mut left = 1.0;
    while t < cfg.t_max {
        let h = cfg.step_at(x);
        let xc = x + stepper.continuous(rng, h);
        let right = (-lambda * xc).exp();
        acc += 0.5 * h * (left + right);
        t += h;
        let xn = xc + stepper.jumps(rng, h);
        if xn >= level {
            let overshoot = if xc < level { xn - level } else { 0.0 };
            return Some((acc, xn, overshoot));
        }
        x = xn;
        left = (-lambda * x).exp();
    }
    None
}

/// Reference samples of the fast-regime limits. The integral runs stop at
/// `config.x_stop`; the overshoot runs at `x_ref`.
pub fn sample_limit_law_b(model: &LevyModel, lambda: f64, n: usize, config: &SimConfig, x_ref: f64) -> Result<LimitLawSamples> {
    config.validate()?;
    model.require_positive_p()?;
    let gamma = model.require_finite_gamma()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    if !(x_ref > 0.0) {
        return Err(Error::Domain(format!("overshoot level must be positive, got {x_ref}")));
    }
    let stepper = Stepper::new(model, config.epsilon)?;
    let draws: Vec<Option<(f64, f64, f64)>> = (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(config.seed, rep);
            let (integral, end, _) = free_run(&stepper, config, lambda, config.x_stop, &mut rng)?;
            let bound = (-lambda * end).exp();
            if bound > 1e-6 * lambda * gamma * integral {
                return None;
            }
            let mut rng = replicate_rng(config.seed, rep + OVERSHOOT_STREAM);
            let (_, _, rho) = free_run(&stepper, config, lambda, x_ref, &mut rng)?;
            Some((lambda * gamma * integral, (-lambda * rho).exp(), bound))
        })
        .collect();
    let kept: Vec<(f64, f64, f64)> = draws.iter().flatten().copied().collect();
    Ok(LimitLawSamples {
        integral: kept.iter().map(|d| d.0).collect(),
        overshoot_factor: kept.iter().map(|d| d.1).collect(),
        rejected: n - kept.len(),
        max_tail_bound: kept.iter().map(|d| d.2).fold(0.0, f64::max),
    })
}

/// Run replicates in fixed batches until `target` paths explode; keeps the
/// first `target` in replicate order.
fn collect_exploding<T, F>(sim: &Simulator, start: f64, target: usize, max_replicates: usize, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&PathRecord, f64, f64) -> T + Sync,
{
    let mut kept = Vec::with_capacity(target);
    let mut used = 0usize;
    while kept.len() < target && used < max_replicates {
        let hi = (used + BATCH).min(max_replicates);
        let batch: Vec<Option<T>> = (used as u64..hi as u64)
            .into_par_iter()
            .map(|rep| {
                let (path, outcome) = sim.run(start, rep)?;
                Ok(match outcome {
                    SimOutcome::Exploded { time, tail, .. } => Some(f(&path, time, tail)),
                    _ => None,
                })
            })
            .collect::<Result<_>>()?;
        for v in batch.into_iter().flatten() {
            if kept.len() < target {
                kept.push(v);
            }
        }
        used = hi;
    }
    Ok((kept, used))
}

/// One level of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: f64,
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    pub ci95: [f64; 2],
    /// `P(|ratio − 1| > threshold)` with its standard error.
    pub exceed_prob: f64,
    pub exceed_se: f64,
    /// Fast regime: KS distance of the normalised remaining time to the
    /// reference integral law.
    pub ks_time: Option<f64>,
    /// Fast regime: KS distance of `φ(X(T_x⁺))/φ(x)` (jump overshoot only)
    /// to the reference `e^{−λϱ}`.
    pub ks_position: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub regime: Option<Regime>,
    pub lambda: Option<f64>,
    pub accepted: usize,
    pub replicates: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Why the table is empty, if it is.
    pub note: Option<String>,
}

impl ConvergenceTable {
    fn empty(note: &str) -> Self {
        ConvergenceTable {
            regime: None,
            lambda: None,
            accepted: 0,
            replicates: 0,
            rows: Vec::new(),
            note: Some(note.to_string()),
        }
    }

    pub fn to_csv(&self) -> String {
        use crate::numeric::fmt_g12;
        let opt = |v: Option<f64>| v.map(fmt_g12).unwrap_or_default();
        let mut out = String::from("level,n,median,mean,ci_low,ci_high,exceed_prob,exceed_se,ks_time,ks_position\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fmt_g12(r.level),
                r.n,
                fmt_g12(r.median),
                fmt_g12(r.mean),
                fmt_g12(r.ci95[0]),
                fmt_g12(r.ci95[1]),
                fmt_g12(r.exceed_prob),
                fmt_g12(r.exceed_se),
                opt(r.ks_time),
                opt(r.ks_position)
            ));
        }
        out
    }
}

/// Checks shared by both experiments; `Ok(None)` means explosion is
/// impossible and the caller reports an empty table.
fn explosion_setup(model: &LevyModel, rate: &RateFunction) -> Result<Option<(PhiFunctions, RegimeReport)>> {
    if classify_boundaries(model, rate)?.explosion == Verdict::No || rate.tail_integral(1.0).is_infinite() {
        return Ok(None);
    }
    let gamma = model.require_finite_gamma()?;
    let phi = phi_and_inverse(rate, gamma)?;
    let report = estimate_lambda(rate, gamma)?;
    if report.regime.is_none() {
        return Err(Error::precondition("H2", "the explosion regime could not be determined"));
    }
    Ok(Some((phi, report)))
}

struct LevelDraw {
    remaining: f64,
    position: f64,
    jump_position: f64,
}

/// Distribution of the remaining explosion time after `T_x⁺`, normalised
/// by `φ(x)` (slow regime) or `φ(X(T_x⁺))` (fast regime), for paths
/// conditioned to explode.
pub fn verify_thm1(model: &LevyModel, rate: &RateFunction, levels: &[f64], config: &VerifyConfig) -> Result<ConvergenceTable> {
    let Some((phi, report)) = explosion_setup(model, rate)? else {
        return Ok(ConvergenceTable::empty("explosion has probability 0 for this rate"));
    };
    let regime = report.regime.expect("checked in setup");
    let mut sim_cfg = config.sim.clone();
    sim_cfg.levels = levels.to_vec();
    let sim = Simulator::new(model, rate, &sim_cfg)?;
    let floor = sim_cfg.c_floor;
    let levels_owned = levels.to_vec();
    let (draws, used) = collect_exploding(&sim, config.start, config.accepted, config.max_replicates, |path, _, tail| {
        let rem = path.remaining_clock(rate, floor, tail);
        levels_owned
            .iter()
            .map(|&level| {
                path.passage(level, true).map(|e| {
                    let k = e.index;
                    let jump = if path.xi_minus[k] < level { path.xi[k] } else { level };
                    LevelDraw {
                        remaining: rem[k],
                        position: path.xi[k],
                        jump_position: jump,
                    }
                })
            })
            .collect::<Vec<Option<LevelDraw>>>()
    })?;
    let reference = if regime == Regime::B {
        let lambda = report.lambda.expect("fast regime has λ");
        let mut rcfg = config.reference.clone().unwrap_or_else(|| config.sim.clone());
        rcfg.seed = config.reference_seed;
        let x_ref = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n_ref = config.reference_samples.unwrap_or(config.accepted);
        Some(sample_limit_law_b(model, lambda, n_ref, &rcfg, x_ref)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (i, &level) in levels.iter().enumerate() {
        let at_level: Vec<&LevelDraw> = draws.iter().filter_map(|d| d[i].as_ref()).collect();
        if at_level.is_empty() {
            continue;
        }
        let ratios: Vec<f64> = at_level
            .iter()
            .map(|d| match regime {
                Regime::A => d.remaining / phi.phi(level),
                Regime::B => d.remaining / phi.phi(d.position),
            })
            .collect();
        let positions: Vec<f64> = at_level.iter().map(|d| phi.phi(d.jump_position) / phi.phi(level)).collect();
        let n = ratios.len();
        let exceed = ratios.iter().filter(|r| (*r - 1.0).abs() > config.threshold).count() as f64 / n as f64;
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let s = Summary::of(&ratios).expect("non-empty");
        rows.push(ConvergenceRow {
            level,
            n,
            median: quantile_sorted(&sorted, 0.5),
            mean: s.mean,
            ci95: s.ci95,
            exceed_prob: exceed,
            exceed_se: (exceed * (1.0 - exceed) / n as f64).sqrt(),
            ks_time: reference.as_ref().map(|r| ks_two_sample(&ratios, &r.integral)),
            ks_position: reference.as_ref().map(|r| ks_two_sample(&positions, &r.overshoot_factor)),
        });
    }
    Ok(ConvergenceTable {
        regime: Some(regime),
        lambda: report.lambda,
        accepted: draws.len(),
        replicates: used,
        rows,
        note: None,
    })
}

/// Speed of explosion at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedRow {
    pub t: f64,
    /// `φ⁻¹(t)` (slow regime) or `−λ⁻¹ log t` (fast regime).
    pub target: f64,
    pub n: usize,
    /// Paths where `T∞ − t` falls inside the analytic tail or before the
    /// start.
    pub excluded: usize,
    pub median_ratio: f64,
    pub q10: f64,
    pub q90: f64,
    /// Same for `inf_{s<t} X(T∞ − s)`.
    pub median_inf_ratio: f64,
    /// At most 1% of paths excluded.
    pub resolvable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedTable {
    pub regime: Option<Regime>,
    pub accepted: usize,
    pub replicates: usize,
    pub rows: Vec<SpeedRow>,
    pub smallest_resolvable: Option<f64>,
    pub note: Option<String>,
}

impl SpeedTable {
    pub fn row_at(&self, t: f64) -> Option<&SpeedRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    pub fn to_csv(&self) -> String {
        use crate::numeric::fmt_g12;
        let mut out = String::from("t,target,n,excluded,median_ratio,q10,q90,median_inf_ratio,resolvable\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_g12(r.t),
                fmt_g12(r.target),
                r.n,
                r.excluded,
                fmt_g12(r.median_ratio),
                fmt_g12(r.q10),
                fmt_g12(r.q90),
                fmt_g12(r.median_inf_ratio),
                r.resolvable
            ));
        }
        out
    }
}

/// `X(T∞ − t)` against its deterministic speed, for paths conditioned to
/// explode.
pub fn verify_thm2(model: &LevyModel, rate: &RateFunction, t_grid: &[f64], config: &VerifyConfig) -> Result<SpeedTable> {
    let Some((phi, report)) = explosion_setup(model, rate)? else {
        return Ok(SpeedTable {
            regime: None,
            accepted: 0,
            replicates: 0,
            rows: Vec::new(),
            smallest_resolvable: None,
            note: Some("explosion has probability 0 for this rate".into()),
        });
    };
    let regime = report.regime.expect("checked in setup");
    if regime == Regime::A && report.contraction.holds != Verdict::Yes {
        return Err(Error::precondition(
            "liminf φ(y)/φ(hy) > 1",
            "slow-regime speed needs the contraction condition",
        ));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("t grid must be positive".into()));
    }
    let sim = Simulator::new(model, rate, &config.sim)?;
    let floor = config.sim.c_floor;
    let (per_path, used) = collect_exploding(&sim, config.start, config.accepted, config.max_replicates, |path, _, tail| {
        let rem = path.remaining_clock(rate, floor, tail);
        t_grid
            .iter()
            .map(|&t| {
                if t < tail || t > rem[0] {
                    return None;
                }
                // last grid point with at least t left
                let k = rem.partition_point(|&r| r >= t) - 1;
                let inf = path.xi[k..].iter().copied().fold(f64::INFINITY, f64::min);
                Some((path.xi[k], inf))
            })
            .collect::<Vec<Option<(f64, f64)>>>()
    })?;
    let mut rows = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let target = match regime {
            Regime::A => phi.inverse(t)?,
            Regime::B => -t.ln() / report.lambda.expect("fast regime has λ"),
        };
        let vals: Vec<(f64, f64)> = per_path.iter().filter_map(|p| p[i]).collect();
        let excluded = per_path.len() - vals.len();
        if vals.is_empty() || !(target > 0.0) {
            continue;
        }
        let mut ratios: Vec<f64> = vals.iter().map(|v| v.0 / target).collect();
        let mut infs: Vec<f64> = vals.iter().map(|v| v.1 / target).collect();
        ratios.sort_by(f64::total_cmp);
        infs.sort_by(f64::total_cmp);
        rows.push(SpeedRow {
            t,
            target,
            n: vals.len(),
            excluded,
            median_ratio: quantile_sorted(&ratios, 0.5),
            q10: quantile_sorted(&ratios, 0.1),
            q90: quantile_sorted(&ratios, 0.9),
            median_inf_ratio: quantile_sorted(&infs, 0.5),
            resolvable: excluded as f64 <= 0.01 * per_path.len() as f64,
        });
    }
    let smallest_resolvable = rows.iter().filter(|r| r.resolvable).map(|r| r.t).fold(None, |acc: Option<f64>, t| {
        Some(acc.map_or(t, |a| a.min(t)))
    });
    Ok(SpeedTable {
        regime: Some(regime),
        accepted: per_path.len(),
        replicates: used,
        rows,
        smallest_resolvable,
        note: None,
    })
}
