//! The decreasing solution `H^(ω)` and downward passage transforms of the
//! time-changed process.
//!
//! With `h(y) = e^{py} H^(ω)(y)`,
//!
//! ```text
//! h(y) = 1 + ∫_y^∞ h(z) ω(z) W_p(z − y) dz,
//! ```
//!
//! marched backwards from a truncation level `x_max`. The discarded part
//! `∫_{x_max}^∞ h ω W_p` is replaced by `Φ'(0)·Ω` with `Ω = ∫_{x_max}^∞ ω`;
//! because `1 ≤ h(z) ≤ exp(Φ'(0)·Ω(z))` and `0 ≤ Φ'(0) − W_p ≤ e^{−pz}V`,
//! the error of that replacement is bounded and reported.

use super::conditions::{check_h0_h1_h2, Verdict};
use super::rate::{weight_tail, RateFunction, Weight};
use super::volterra::{backward_march, kernel_values, weight_values, OmegaGrid, OmegaScaleTable};
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::numeric::fmt_g12;
use crate::numeric::interp::UniformCubic;
use crate::scale_functions::{InversionMethod, ScaleKernel};
use serde::Serialize;

/// Controls for the truncated `H^(ω)` solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HOptions {
    /// Target grid step.
    pub step: f64,
    /// Requested bound on the truncation error of `h`.
    pub tolerance: f64,
    /// Cap on the number of grid cells; the step is widened beyond it.
    pub max_nodes: usize,
    /// Explicit truncation level; chosen automatically when `None`.
    pub x_max: Option<f64>,
}

impl Default for HOptions {
    fn default() -> Self {
        HOptions {
            step: 5e-3,
            tolerance: 1e-6,
            max_nodes: 12_000,
            x_max: None,
        }
    }
}

/// `H^(ω)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct HOmega {
    grid: OmegaGrid,
    p: f64,
    /// `e^{py} H^(ω)(y)` at the nodes.
    h: Vec<f64>,
    tail_bound: f64,
    /// `Φ'(0)·∫_{x_max}^∞ ω`, the tail estimate that was added.
    tail_estimate: f64,
}

/// `H^(ω)(x)/H^(ω)(c)` with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DownwardLaplace {
    pub value: f64,
    pub tail_bound: f64,
    pub x_max: f64,
}

impl HOmega {
    /// Solve on `[lo, x_max]` for an arbitrary weight; no precondition
    /// checks beyond finiteness of the tail.
    pub fn solve(model: &LevyModel, weight: &dyn Weight, lo: f64, opts: &HOptions) -> Result<Self> {
        let kernel = ScaleKernel::new(model, 0.0, InversionMethod::Auto, 0)?;
        let p = kernel.phi_q();
        let slope = kernel.tilted_limit();
        if !slope.is_finite() {
            return Err(Error::precondition("p > 0", "H^(ω) needs W_p bounded"));
        }
        let x_max = match opts.x_max {
            Some(x) => x,
            None => choose_x_max(weight, lo, p, slope, opts.tolerance),
        };
        let grid = OmegaGrid::new(lo, x_max, opts.step.max((x_max - lo) / opts.max_nodes as f64))?;
        let n = grid.len();
        let omega_tail = weight_tail(weight, x_max);
        if !omega_tail.is_finite() {
            return Err(Error::precondition("H1", "∫^∞ ω(z) dz diverges, so H^(ω) does not exist"));
        }
        let tail_estimate = slope * omega_tail;
        let om = weight_values(weight, &grid)?;
        let k = kernel_values(&kernel, grid.step, n);
        let h = backward_march(|_| 1.0 + tail_estimate, 1.0 + tail_estimate, &k, &om, grid.step, n)?;
        // replacement error at y, then propagated through the march
        let v_env = residual_envelope(&kernel, x_max - lo);
        let local = |y: f64| {
            slope * omega_tail * (slope * omega_tail).exp_m1() + omega_tail * (-p * (x_max - y)).exp() * v_env
        };
        let growth = (h[0] / (1.0 + tail_estimate)).max(1.0);
        let tail_bound = local(lo) * growth;
        Ok(HOmega {
            grid,
            p,
            h,
            tail_bound,
            tail_estimate,
        })
    }

    pub fn grid(&self) -> &OmegaGrid {
        &self.grid
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }

    /// `e^{py}H^(ω)(y)` at node `j`.
    pub fn normalised_at(&self, j: usize) -> f64 {
        self.h[j]
    }

    /// `e^{py}H^(ω)(y)` by cubic interpolation.
    pub fn normalised(&self, y: f64) -> Result<f64> {
        if y < self.grid.lo - 1e-12 || y > self.grid.x_max + 1e-12 {
            return Err(Error::Domain(format!(
                "y = {y} outside [{}, {}]",
                self.grid.lo, self.grid.x_max
            )));
        }
        let c = UniformCubic::new(self.grid.step, self.h.clone());
        c.eval((y - self.grid.lo).clamp(0.0, c.upper()))
            .ok_or_else(|| Error::Numeric("interpolation failed".into()))
    }

    /// `H^(ω)(y)`.
    pub fn value(&self, y: f64) -> Result<f64> {
        Ok((-self.p * y).exp() * self.normalised(y)?)
    }

    /// Cross-check against `h(y) = 1 + ∫_y^∞ ω(z) e^{−p(z−y)} W^(ω)(z,y) dz`
    /// using a solved table on the same grid; returns the largest relative
    /// gap over the nodes `j` with `y_j ≤ y_limit`.
    pub fn column_gap(&self, table: &OmegaScaleTable, y_limit: f64) -> Result<f64> {
        if table.grid() != &self.grid {
            return Err(Error::Domain("column check needs the same grid".into()));
        }
        let n = self.grid.len();
        let om = table.weight_samples();
        let step = self.grid.step;
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            if self.grid.node(j) > y_limit {
                break;
            }
            let mut acc = 0.5 * om[j] * table.normalised(j, j) + 0.5 * om[n] * table.normalised(n, j);
            for i in j + 1..n {
                acc += om[i] * table.normalised(i, j);
            }
            let col = 1.0 + step * acc + self.tail_estimate;
            worst = worst.max((col - self.h[j]).abs() / self.h[j]);
        }
        Ok(worst)
    }

    /// CSV `y, H_omega`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,H_omega\n");
        for (j, v) in self.h.iter().enumerate() {
            let y = self.grid.node(j);
            out.push_str(&format!("{},{}\n", fmt_g12(y), fmt_g12((-self.p * y).exp() * v)));
        }
        out
    }
}

fn residual_envelope(kernel: &ScaleKernel, span: f64) -> f64 {
    [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, span]
        .iter()
        .filter(|&&z| z <= span)
        .filter_map(|&z| kernel.residual(z).ok())
        .fold(0.0f64, |a, v| a.max(v.abs()))
        * 2.0
}

fn choose_x_max(weight: &dyn Weight, lo: f64, p: f64, slope: f64, tol: f64) -> f64 {
    // e^{−p(x_max − lo)} small and the quadratic tail error below tol
    let mut x = lo + (tol.ln().abs() / p).max(10.0);
    for _ in 0..60 {
        let t = slope * weight_tail(weight, x);
        if t * t.exp_m1() <= tol || x > lo + 2000.0 {
            break;
        }
        x = lo + 1.5 * (x - lo);
    }
    x
}

/// `H^(ω)` at the points of `y_grid` with truncation at `x_max`.
pub fn h_omega(model: &LevyModel, rate: &RateFunction, y_grid: &[f64], x_max: f64) -> Result<Vec<f64>> {
    let report = check_h0_h1_h2(model, rate)?;
    let lo = y_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if report.h0 == Verdict::No {
        return Err(Error::precondition("H1", "∫^∞ ω W_p diverges"));
    }
    if lo <= 0.0 && report.h1 == Verdict::No {
        return Err(Error::precondition("H1", "∫_{0+} ω W_p diverges, so H^(ω)(0) is infinite"));
    }
    let opts = HOptions {
        x_max: Some(x_max),
        ..HOptions::default()
    };
    let lo = lo.max(if rate.omega(0.0).is_finite() { 0.0 } else { 1e-6 });
    let h = HOmega::solve(model, rate, lo, &opts)?;
    y_grid.iter().map(|&y| h.value(y.max(lo))).collect()
}

/// `E_x[e^{−T_c⁻}; T_c⁻ < ∞] = H^(ω)(x)/H^(ω)(c)` for the time-changed
/// process.
pub fn downward_laplace(model: &LevyModel, rate: &RateFunction, x: f64, c: f64) -> Result<DownwardLaplace> {
    downward_laplace_with(model, rate, x, c, &HOptions::default())
}

pub fn downward_laplace_with(
    model: &LevyModel,
    rate: &RateFunction,
    x: f64,
    c: f64,
    opts: &HOptions,
) -> Result<DownwardLaplace> {
    if !(x >= c && c >= 0.0) {
        return Err(Error::Domain(format!("downward transform needs x ≥ c ≥ 0, got x={x}, c={c}")));
    }
    let report = check_h0_h1_h2(model, rate)?;
    if report.h0 == Verdict::No {
        return Err(Error::precondition("H1", "∫^∞ ω W_p diverges"));
    }
    if c == 0.0 && report.h1 != Verdict::Yes {
        return Err(Error::precondition("H1", "c = 0 needs ∫_{0+} ω W_p < ∞"));
    }
    if x == c {
        return Ok(DownwardLaplace {
            value: 1.0,
            tail_bound: 0.0,
            x_max: x,
        });
    }
    let lo = if c == 0.0 && !rate.omega(0.0).is_finite() { 1e-6 } else { c };
    let h = HOmega::solve(model, rate, lo, opts)?;
    if h.tail_bound() > opts.tolerance {
        return Err(Error::precondition(
            "tail bound ≤ tolerance",
            format!("truncation at x_max={} leaves bound {:e}", h.grid().x_max, h.tail_bound()),
        ));
    }
    let value = (-h.p * (x - lo)).exp() * h.normalised(x)? / h.normalised(lo)?;
    Ok(DownwardLaplace {
        value: value.clamp(0.0, 1.0),
        tail_bound: h.tail_bound(),
        x_max: h.grid().x_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega_scale::rate::ConstantWeight;
    use crate::omega_scale::volterra::solve_w_omega;

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_weight_gives_exponential() {
        let opts = HOptions {
            x_max: Some(10.0),
            step: 0.05,
            ..HOptions::default()
        };
        let h = HOmega::solve(&bm(), &ConstantWeight(0.0), 0.0, &opts).unwrap();
        for &y in &[0.0, 1.0, 4.5] {
            assert!((h.value(y).unwrap() - (-y as f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_rate_h_is_finite_and_tends_to_exp() {
        let r = RateFunction::exponential(1.0).unwrap();
        let h = HOmega::solve(&bm(), &r, 0.0, &HOptions::default()).unwrap();
        let x_max = h.grid().x_max;
        let h0 = h.value(0.0).unwrap();
        assert!(h0.is_finite() && h0 > 1.0);
        // e^{py}H(y) → 1 well inside the truncation range
        let mid = h.normalised(0.5 * x_max).unwrap();
        assert!((mid - 1.0).abs() < 1e-3, "{mid}");
        assert!(h.tail_bound() < 1e-6);
    }

    #[test]
    fn backward_and_column_routes_agree() {
        let r = RateFunction::exponential(1.0).unwrap();
        let opts = HOptions {
            x_max: Some(20.0),
            step: 0.02,
            ..HOptions::default()
        };
        let h = HOmega::solve(&bm(), &r, 0.0, &opts).unwrap();
        let t = solve_w_omega(&bm(), r, h.grid(), InversionMethod::Auto).unwrap();
        assert!(h.column_gap(&t, 10.0).unwrap() < 1e-4);
    }

    #[test]
    fn downward_laplace_properties() {
        let r = RateFunction::exponential(1.0).unwrap();
        let m = bm();
        assert_eq!(downward_laplace(&m, &r, 1.0, 1.0).unwrap().value, 1.0);
        let a = downward_laplace(&m, &r, 1.0, 0.1).unwrap().value;
        let b = downward_laplace(&m, &r, 2.0, 0.1).unwrap().value;
        assert!(0.0 < b && b < a && a < 1.0);
        // huge R: the time change vanishes
        let fast = RateFunction::new(crate::omega_scale::rate::RateSpec::Tabulated {
            points: vec![[1.0, 1e9 * 1f64.exp()], [2.0, 1e9 * 2f64.exp()]],
            left_exponent: Some(0.0),
            right_tail: Some(crate::omega_scale::rate::TailSpec::Exponential { lambda: 1.0 }),
        })
        .unwrap();
        let v = downward_laplace(&m, &fast, 1.0, 0.2).unwrap().value;
        assert!((v - (-0.8f64).exp()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn constant_rate_fails_h1() {
        let r = RateFunction::constant(1.0).unwrap();
        assert!(matches!(
            downward_laplace(&bm(), &r, 1.0, 0.5),
            Err(Error::Precondition { .. })
        ));
        assert!(h_omega(&bm(), &r, &[0.5], 10.0).is_err());
    }
}
