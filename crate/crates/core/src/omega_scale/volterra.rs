//! Product-trapezoid solvers for the `ω`-weighted scale function.
//!
//! With `W_p(z) = e^{−pz} W(z)` the normalised unknown
//! `w(x,y) = e^{−p(x−y)} W^(ω)(x,y)` solves either of
//!
//! ```text
//! w(x,y) = W_p(x−y) + ∫_y^x W_p(x−z) ω(z) w(z,y) dz      (column form)
//! w(x,y) = W_p(x−y) + ∫_y^x w(x,z) ω(z) W_p(z−y) dz      (row form)
//! ```
//!
//! Both are marched on a uniform grid with the trapezoid rule, treating the
//! diagonal term implicitly.

use super::rate::Weight;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::numeric::fmt_g12;
use crate::numeric::interp::UniformCubic;
use crate::scale_functions::{InversionMethod, ScaleKernel};
use rayon::prelude::*;
use std::sync::Arc;

/// Uniform grid `lo + k·step`, `k = 0..=n`, with `lo + n·step = x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaGrid {
    pub lo: f64,
    pub x_max: f64,
    pub step: f64,
}

impl OmegaGrid {
    /// Grid on `[lo, x_max]` with a step no larger than `step`.
    pub fn new(lo: f64, x_max: f64, step: f64) -> Result<Self> {
        if !(lo >= 0.0 && x_max > lo && step > 0.0 && x_max.is_finite()) {
            return Err(Error::Domain(format!(
                "Volterra grid needs 0 ≤ lo < x_max and step > 0, got lo={lo}, x_max={x_max}, step={step}"
            )));
        }
        let n = ((x_max - lo) / step).ceil().max(1.0);
        Ok(OmegaGrid {
            lo,
            x_max,
            step: (x_max - lo) / n,
        })
    }

    pub fn len(&self) -> usize {
        ((self.x_max - self.lo) / self.step).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step
    }

    /// Index of the node at `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let u = (x - self.lo) / self.step;
        let k = u.round();
        ((u - k).abs() < 1e-7 && k >= 0.0 && k as usize <= self.len()).then_some(k as usize)
    }
}

/// `W_p(k·step)`, `k = 0..=n`.
pub(crate) fn kernel_values(kernel: &ScaleKernel, step: f64, n: usize) -> Vec<f64> {
    (0..=n).into_par_iter().map(|k| kernel.tilted_value(k as f64 * step)).collect()
}

pub(crate) fn weight_values(weight: &dyn Weight, grid: &OmegaGrid) -> Result<Vec<f64>> {
    let n = grid.len();
    let om: Vec<f64> = (0..=n).map(|k| weight.omega(grid.node(k))).collect();
    if let Some(k) = om.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain(format!(
            "weight is singular or negative at x = {} inside the grid",
            grid.node(k)
        )));
    }
    Ok(om)
}

fn implicit_factor(step: f64, k0: f64, om: f64) -> Result<f64> {
    let d = 1.0 - 0.5 * step * k0 * om;
    if d <= 0.05 {
        return Err(Error::Numeric(format!(
            "Volterra step {step} too coarse for W(0)·ω = {}",
            k0 * om
        )));
    }
    Ok(d)
}

/// Column form for fixed `y = node j`: returns `w(node j + m, node j)`.
fn solve_column(k: &[f64], om: &[f64], step: f64, j: usize, n: usize) -> Result<Vec<f64>> {
    let len = n - j + 1;
    let mut col = vec![0.0; len];
    let mut g = vec![0.0; len];
    col[0] = k[0];
    g[0] = om[j] * col[0];
    for m in 1..len {
        let mut acc = 0.5 * k[m] * g[0];
        for l in 1..m {
            acc += k[m - l] * g[l];
        }
        let d = implicit_factor(step, k[0], om[j + m])?;
        col[m] = (k[m] + step * acc) / d;
        g[m] = om[j + m] * col[m];
    }
    Ok(col)
}

/// Backward march of `v(j) = f(j) + ∫_{z_j}^{z_n} v(z) ω(z) W_p(z − z_j) dz`
/// with `v(n) = terminal`.
pub(crate) fn backward_march(
    forcing: impl Fn(usize) -> f64,
    terminal: f64,
    k: &[f64],
    om: &[f64],
    step: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let mut v = vec![0.0; n + 1];
    let mut g = vec![0.0; n + 1];
    v[n] = terminal;
    g[n] = om[n] * v[n];
    for j in (0..n).rev() {
        let mut acc = 0.5 * g[n] * k[n - j];
        for l in j + 1..n {
            acc += g[l] * k[l - j];
        }
        let d = implicit_factor(step, k[0], om[j])?;
        v[j] = (forcing(j) + step * acc) / d;
        g[j] = om[j] * v[j];
    }
    Ok(v)
}

/// Row form at `x = node n`: returns `w(node n, node j)` for `j = 0..=n`.
fn solve_row(k: &[f64], om: &[f64], step: f64, n: usize) -> Result<Vec<f64>> {
    backward_march(|j| k[n - j], k[0], k, om, step, n)
}

/// Solution table of the `ω`-weighted scale function on a triangular grid.
#[derive(Debug, Clone)]
pub struct OmegaScaleTable {
    grid: OmegaGrid,
    p: f64,
    kernel: ScaleKernel,
    weight: Arc<dyn Weight>,
    k: Vec<f64>,
    om: Vec<f64>,
    /// `columns[j][m] = w(node j + m, node j)`
    columns: Vec<Vec<f64>>,
}

/// Gap between the column and row forms at check rows.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FormCheck {
    pub max_relative_gap: f64,
    pub rows_checked: usize,
}

/// Solve for `W^(ω)` on the triangle `{lo ≤ y ≤ x ≤ x_max}`.
pub fn solve_w_omega<W: Weight + 'static>(
    model: &LevyModel,
    weight: W,
    grid: &OmegaGrid,
    method: InversionMethod,
) -> Result<OmegaScaleTable> {
    let kernel = ScaleKernel::new(model, 0.0, method, 0)?;
    OmegaScaleTable::solve(kernel, Arc::new(weight), *grid)
}

impl OmegaScaleTable {
    pub(crate) fn solve(kernel: ScaleKernel, weight: Arc<dyn Weight>, grid: OmegaGrid) -> Result<Self> {
        let n = grid.len();
        let om = weight_values(weight.as_ref(), &grid)?;
        let k = kernel_values(&kernel, grid.step, n);
        let columns: Vec<Vec<f64>> = (0..=n)
            .into_par_iter()
            .map(|j| solve_column(&k, &om, grid.step, j, n))
            .collect::<Result<_>>()?;
        Ok(OmegaScaleTable {
            grid,
            p: kernel.phi_q(),
            kernel,
            weight,
            k,
            om,
            columns,
        })
    }

    pub fn grid(&self) -> &OmegaGrid {
        &self.grid
    }

    /// The tilt `p` used for normalisation.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn weight(&self) -> &dyn Weight {
        self.weight.as_ref()
    }

    pub(crate) fn kernel(&self) -> &ScaleKernel {
        &self.kernel
    }

    pub(crate) fn weight_samples(&self) -> &[f64] {
        &self.om
    }

    /// Normalised value `e^{−p(x−y)} W^(ω)(x,y)` at nodes `i ≥ j`.
    pub fn normalised(&self, i: usize, j: usize) -> f64 {
        assert!(i >= j, "W^(ω)(x,y) tabulated for y ≤ x only");
        self.columns[j][i - j]
    }

    /// `W^(ω)(x_i, y_j)` at nodes.
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        (self.p * (i - j) as f64 * self.grid.step).exp() * self.normalised(i, j)
    }

    /// `W^(ω)(x, y)` for grid points `y ≤ x`.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let (i, j) = self.nodes(x, y)?;
        Ok(self.value_at(i, j))
    }

    fn nodes(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        match (self.grid.index_of(x), self.grid.index_of(y)) {
            (Some(i), Some(j)) if j <= i => Ok((i, j)),
            _ => Err(Error::Domain(format!(
                "({x}, {y}) is not a grid pair with y ≤ x on [{}, {}] step {}",
                self.grid.lo, self.grid.x_max, self.grid.step
            ))),
        }
    }

    /// Compare the column solution with the row form at a few `x`.
    pub fn check_forms(&self) -> Result<FormCheck> {
        let n = self.grid.len();
        let rows: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&r| r > 0).collect();
        let mut worst: f64 = 0.0;
        for &i in &rows {
            let row = solve_row(&self.k, &self.om, self.grid.step, i)?;
            for (j, &rv) in row.iter().enumerate() {
                let cv = self.normalised(i, j);
                let scale = cv.abs().max(rv.abs()).max(1e-300);
                worst = worst.max((cv - rv).abs() / scale);
            }
        }
        Ok(FormCheck {
            max_relative_gap: worst,
            rows_checked: rows.len(),
        })
    }

    /// CSV `x, y, W_omega` over the triangle, thinned to every `stride`-th node.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let n = self.grid.len();
        let mut out = String::from("x,y,W_omega\n");
        for i in (0..=n).step_by(stride) {
            for j in (0..=i).step_by(stride) {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt_g12(self.grid.node(i)),
                    fmt_g12(self.grid.node(j)),
                    fmt_g12(self.value_at(i, j))
                ));
            }
        }
        out
    }
}

/// `E_x[e^{−η(τ_c⁻)}; τ_c⁻ < τ_b⁺] = W^(ω)(b,x) / W^(ω)(b,c)`.
///
/// Solved with the row form on a uniform grid over `[c, b]` at the table's
/// resolution, so `x`, `c` and `b` need not be nodes.
pub fn weighted_exit(table: &OmegaScaleTable, x: f64, c: f64, b: f64) -> Result<f64> {
    if !(c <= x && x < b) {
        return Err(Error::Domain(format!("weighted exit needs c ≤ x < b, got ({c}, {x}, {b})")));
    }
    let g = table.grid();
    if c < g.lo - 1e-12 || b > g.x_max + 1e-12 {
        return Err(Error::Domain(format!(
            "[{c}, {b}] lies outside the solved range [{}, {}]",
            g.lo, g.x_max
        )));
    }
    if x == c {
        return Ok(1.0);
    }
    let local = OmegaGrid::new(c, b, g.step)?;
    let n = local.len().max(3);
    let local = OmegaGrid {
        step: (b - c) / n as f64,
        ..local
    };
    let om = weight_values(table.weight(), &local)?;
    let k = kernel_values(table.kernel(), local.step, n);
    let row = solve_row(&k, &om, local.step, n)?;
    let interp = UniformCubic::new(local.step, row);
    let at_x = interp
        .eval(x - c)
        .ok_or_else(|| Error::Numeric("interpolation outside row".into()))?;
    let ratio = (-table.p() * (x - c)).exp() * at_x / interp.values()[0];
    Ok(ratio.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega_scale::rate::{ConstantWeight, RateFunction, ScaledWeight};
    use crate::scale_functions::{compute_scale, ScaleOptions};

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_weight_reproduces_kernel() {
        let g = OmegaGrid::new(0.0, 3.0, 0.05).unwrap();
        let t = solve_w_omega(&bm(), ConstantWeight(0.0), &g, InversionMethod::Auto).unwrap();
        for i in 0..=g.len() {
            for j in 0..=i {
                let d = (i - j) as f64 * g.step;
                assert!((t.value_at(i, j) - d.exp_m1()).abs() < 1e-12 * (1.0 + d.exp()));
            }
        }
    }

    #[test]
    fn constant_weight_matches_q_scale() {
        let g = OmegaGrid::new(0.0, 5.0, 0.01).unwrap();
        let t = solve_w_omega(&bm(), ConstantWeight(1.0), &g, InversionMethod::Auto).unwrap();
        let xs: Vec<f64> = (0..=g.len()).map(|k| g.node(k)).collect();
        let w1 = compute_scale(&bm(), 1.0, &xs, &ScaleOptions::default()).unwrap();
        for (i, &x) in xs.iter().enumerate().skip(1) {
            let rel = (t.value_at(i, 0) - w1.values()[i]).abs() / w1.values()[i];
            assert!(rel < 1e-3, "x={x}: rel {rel}");
        }
        assert!(t.check_forms().unwrap().max_relative_gap < 1e-6);
    }

    #[test]
    fn diagonal_is_w_at_zero() {
        let g = OmegaGrid::new(0.5, 3.0, 0.1).unwrap();
        let t = solve_w_omega(&bm(), RateFunction::exponential(1.0).unwrap(), &g, InversionMethod::Auto).unwrap();
        for i in 0..=g.len() {
            assert_eq!(t.value_at(i, i), 0.0);
        }
    }

    #[test]
    fn monotone_in_weight_and_in_x() {
        let g = OmegaGrid::new(0.0, 4.0, 0.02).unwrap();
        let r = RateFunction::exponential(1.0).unwrap();
        let t1 = solve_w_omega(&bm(), r.clone(), &g, InversionMethod::Auto).unwrap();
        let t2 = solve_w_omega(&bm(), ScaledWeight { factor: 2.0, inner: r }, &g, InversionMethod::Auto).unwrap();
        for i in 1..=g.len() {
            for j in 0..i {
                assert!(t2.value_at(i, j) >= t1.value_at(i, j));
                let d = (i - j) as f64 * g.step;
                assert!(t1.value_at(i, j) >= d.exp_m1() - 1e-12);
                assert!(t1.value_at(i, j) >= t1.value_at(i - 1, j));
            }
        }
    }

    #[test]
    fn weighted_exit_reductions() {
        let g = OmegaGrid::new(0.0, 2.0, 0.002).unwrap();
        let t0 = solve_w_omega(&bm(), ConstantWeight(0.0), &g, InversionMethod::Auto).unwrap();
        let v = weighted_exit(&t0, 1.0, 0.0, 2.0).unwrap();
        assert!((v - 1.0 / (std::f64::consts::E + 1.0)).abs() < 1e-9);
        assert_eq!(weighted_exit(&t0, 0.3, 0.3, 2.0).unwrap(), 1.0);
        let t1 = solve_w_omega(&bm(), ConstantWeight(1.0), &g, InversionMethod::Auto).unwrap();
        let v = weighted_exit(&t1, 1.0, 0.0, 2.0).unwrap();
        // roots of s² − s = 1 are φ± = (1 ± √5)/2, W^(1)(x) = (e^{φ+ x} − e^{φ− x})/√5
        let (a, b) = ((1.0 + 5f64.sqrt()) / 2.0, (1.0 - 5f64.sqrt()) / 2.0);
        let w1 = |x: f64| ((a * x).exp() - (b * x).exp()) / 5f64.sqrt();
        assert!((v - w1(1.0) / w1(2.0)).abs() < 1e-5, "{v}");
        assert!(weighted_exit(&t1, 1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn singular_weight_is_domain_error() {
        let g = OmegaGrid::new(0.0, 1.0, 0.1).unwrap();
        let r = RateFunction::power(0.0, 2.0).unwrap();
        assert!(matches!(
            solve_w_omega(&bm(), r, &g, InversionMethod::Auto),
            Err(Error::Domain(_))
        ));
    }
}
