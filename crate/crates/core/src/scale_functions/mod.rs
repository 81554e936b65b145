//! q-scale functions, exit identities, the resolvent density and the
//! stationary overshoot transform.

mod kernel;
mod overshoot;

pub use kernel::{InversionMethod, ScaleKernel};
pub use overshoot::OvershootLaw;

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::numeric::fmt_g12;
use crate::numeric::quad::integrate_to_inf;
use rayon::prelude::*;
use serde::Serialize;

/// Options for [`compute_scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleOptions {
    pub method: InversionMethod,
    /// Contour nodes for the inversion.
    pub nodes: usize,
    /// Largest accepted relative inversion error estimate.
    pub tolerance: f64,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            method: InversionMethod::Auto,
            nodes: crate::numeric::talbot::DEFAULT_NODES,
            tolerance: 1e-4,
        }
    }
}

/// `0` followed by `n` geometrically spaced nodes on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    g.push(0.0);
    let ratio = (hi / lo).ln() / (n.max(2) - 1) as f64;
    g.extend((0..n).map(|i| lo * (ratio * i as f64).exp()));
    if let Some(last) = g.last_mut() {
        *last = hi;
    }
    g
}

/// Default grid: `0` and 400 geometric nodes on `[1e-3, 50]`.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(1e-3, 50.0, 400)
}

/// `W^(q)` tabulated on a grid, with an evaluator for off-grid points.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    kernel: ScaleKernel,
    grid: Vec<f64>,
    w: Vec<f64>,
    w_tilted: Vec<f64>,
    error: Vec<f64>,
    fingerprint: String,
}

/// Laplace round-trip comparison at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    pub s: f64,
    pub numeric: f64,
    pub exact: f64,
    pub relative_error: f64,
}

/// `e^{−px}W(x+y) − W(y)` next to its limit `(1 − e^{−px})/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalLimit {
    pub value: f64,
    pub limit: f64,
}

/// Tabulate `W^(q)` on `grid` (which must start at 0 and increase).
pub fn compute_scale(model: &LevyModel, q: f64, grid: &[f64], opts: &ScaleOptions) -> Result<ScaleTable> {
    if grid.first() != Some(&0.0) {
        return Err(Error::Domain("scale grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("scale grid must be finite and strictly increasing".into()));
    }
    let kernel = ScaleKernel::new(model, q, opts.method, opts.nodes)?;
    let phi = kernel.phi_q();
    let nodes: Vec<(f64, f64)> = grid.par_iter().map(|&x| kernel.tilted(x)).collect();
    let mut worst: Option<(f64, f64)> = None;
    for (&x, &(v, e)) in grid.iter().zip(&nodes) {
        let rel = e / v.abs().max(f64::MIN_POSITIVE);
        if !v.is_finite() || (x > 0.0 && rel > opts.tolerance) {
            if worst.map_or(true, |(_, r)| rel > r || rel.is_nan()) {
                worst = Some((x, rel));
            }
        }
    }
    if let Some((x, rel)) = worst {
        return Err(Error::Numeric(format!(
            "scale inversion did not converge: worst node x={x} with relative error estimate {rel:e}"
        )));
    }
    let w_tilted: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let w: Vec<f64> = grid.iter().zip(&w_tilted).map(|(&x, &t)| (phi * x).exp() * t).collect();
    let error: Vec<f64> = grid.iter().zip(&nodes).map(|(&x, n)| (phi * x).exp() * n.1).collect();
    let table = ScaleTable {
        fingerprint: model.fingerprint(),
        kernel,
        grid: grid.to_vec(),
        w,
        w_tilted,
        error,
    };
    table.check_monotone()?;
    Ok(table)
}

impl ScaleTable {
    pub fn q(&self) -> f64 {
        self.kernel.q()
    }

    pub fn kernel(&self) -> &ScaleKernel {
        &self.kernel
    }

    pub fn model(&self) -> &LevyModel {
        self.kernel.model()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `W^(q)` on the grid.
    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// `e^{−Φ(q)x} W^(q)(x)` on the grid.
    pub fn tilted_values(&self) -> &[f64] {
        &self.w_tilted
    }

    pub fn error_estimates(&self) -> &[f64] {
        &self.error
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// `W^(q)(x)` at any `x` (zero for `x < 0`).
    pub fn w(&self, x: f64) -> f64 {
        match self.grid.binary_search_by(|g| g.total_cmp(&x)) {
            Ok(i) => self.w[i],
            Err(_) => self.kernel.w(x),
        }
    }

    /// `e^{−Φ(q)x} W^(q)(x)`.
    pub fn w_tilted(&self, x: f64) -> f64 {
        match self.grid.binary_search_by(|g| g.total_cmp(&x)) {
            Ok(i) => self.w_tilted[i],
            Err(_) => self.kernel.tilted_value(x),
        }
    }

    fn check_monotone(&self) -> Result<()> {
        for i in 1..self.grid.len() {
            let slack = 1e-9 + self.error[i] + self.error[i - 1];
            let wt_slack = 1e-9 + (self.error[i] + self.error[i - 1]) * (-self.kernel.phi_q() * self.grid[i - 1]).exp();
            if self.w[i] < self.w[i - 1] - slack * (1.0 + self.w[i].abs())
                || self.w_tilted[i] < self.w_tilted[i - 1] - wt_slack * (1.0 + self.w_tilted[i].abs())
            {
                return Err(Error::Numeric(format!(
                    "scale function not monotone between x={} and x={}",
                    self.grid[i - 1], self.grid[i]
                )));
            }
        }
        Ok(())
    }

    fn require_q_zero(&self, what: &str) -> Result<()> {
        if self.q() != 0.0 {
            return Err(Error::precondition("q = 0", format!("{what} needs a table computed at q = 0")));
        }
        Ok(())
    }

    /// Compare `∫_0^∞ e^{−sy} W^(q)(y) dy` with `1/(ψ(s) − q)`.
    pub fn laplace_round_trip(&self, s_values: &[f64]) -> Result<Vec<RoundTrip>> {
        let phi = self.kernel.phi_q();
        let model = self.kernel.model();
        s_values
            .par_iter()
            .map(|&s| {
                if !(s > phi) {
                    return Err(Error::Domain(format!("round trip needs s > Φ(q) = {phi}, got {s}")));
                }
                let numeric = integrate_to_inf(
                    |y| (-(s - phi) * y).exp() * self.kernel.tilted_value(y),
                    0.0,
                    1e-13,
                    1e-10,
                )
                .value;
                let exact = 1.0 / (model.psi(s)? - self.q());
                Ok(RoundTrip {
                    s,
                    numeric,
                    exact,
                    relative_error: ((numeric - exact) / exact).abs(),
                })
            })
            .collect()
    }

    /// Potential density of `ξ` started at `x` and killed below 0:
    /// `u(x,y) = e^{−px}W(y) − W(y−x)`.
    pub fn resolvent_density(&self, x: f64, y: f64) -> Result<f64> {
        self.require_q_zero("resolvent density")?;
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Domain(format!("resolvent density needs x, y > 0, got ({x}, {y})")));
        }
        let p = self.kernel.phi_q();
        let u = if y <= x {
            (-p * (x - y)).exp() * self.w_tilted(y)
        } else if p > 0.0 {
            self.kernel.residual(y - x)? - (-p * x).exp() * self.kernel.residual(y)?
        } else {
            self.w(y) - self.w(y - x)
        };
        if u < -1e-9 {
            return Err(Error::Consistency(format!("resolvent density u({x},{y}) = {u:e} < 0")));
        }
        Ok(u.max(0.0))
    }

    /// `P_x(τ_c⁻ < τ_b⁺) = W(b−x)/W(b−c)`, or the q-discounted version.
    pub fn exit_down_prob(&self, x: f64, c: f64, b: f64) -> Result<f64> {
        if !(c < x && x < b) {
            return Err(Error::Domain(format!("exit probability needs c < x < b, got ({c}, {x}, {b})")));
        }
        let phi = self.kernel.phi_q();
        let ratio = (-phi * (x - c)).exp() * self.w_tilted(b - x) / self.w_tilted(b - c);
        Ok(ratio.clamp(0.0, 1.0))
    }

    /// `e^{−px}W(x+y) − W(y)` (formed from the bounded residual), with the
    /// limit `(1 − e^{−px})/γ`.
    pub fn renewal_limit(&self, x: f64, y: f64) -> Result<RenewalLimit> {
        self.require_q_zero("renewal limit")?;
        let model = self.kernel.model();
        if model.gamma().is_infinite() {
            return Err(Error::Unsupported("renewal limit needs γ < ∞".into()));
        }
        let p = model.require_positive_p()?;
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Domain(format!("renewal limit needs x, y > 0, got ({x}, {y})")));
        }
        let value = self.kernel.residual(y)? - (-p * x).exp() * self.kernel.residual(x + y)?;
        Ok(RenewalLimit {
            value,
            limit: -(-p * x).exp_m1() / model.gamma(),
        })
    }

    /// CSV with columns `x, W, W_p, error_estimate`; `W_p` is the
    /// `Φ(q)`-tilted function.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,W,W_p,error_estimate\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_g12(self.grid[i]),
                fmt_g12(self.w[i]),
                fmt_g12(self.w_tilted[i]),
                fmt_g12(self.error[i])
            ));
        }
        out
    }
}

/// `E_x[e^{−qτ_c⁻}] = e^{−Φ(q)(x−c)}`.
pub fn ruin_laplace(model: &LevyModel, x: f64, c: f64, q: f64) -> Result<f64> {
    if !(x >= c) {
        return Err(Error::Domain(format!("ruin transform needs x ≥ c, got x={x}, c={c}")));
    }
    if x == c {
        return Ok(1.0);
    }
    Ok((-model.phi(q)? * (x - c)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpDensity, JumpSpec, ModelSpec};
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 1.0).unwrap()
    }

    fn cp() -> LevyModel {
        LevyModel::new(ModelSpec {
            sigma2: 0.0,
            mu: 0.5 - 2.0 * (-1.0f64).exp(),
            jumps: JumpSpec::CompoundPoisson {
                rate: 1.0,
                density: JumpDensity::Exponential { beta: 1.0 },
            },
        })
        .unwrap()
    }

    fn table(m: &LevyModel) -> ScaleTable {
        compute_scale(m, 0.0, &default_grid(), &ScaleOptions::default()).unwrap()
    }

    #[test]
    fn brownian_scale_examples() {
        let t = table(&bm());
        assert!((t.w(1.0) - (E - 1.0)).abs() < 1e-13);
        assert_eq!(t.w(-1e-12), 0.0);
        assert!((t.kernel().tilted_limit() - 1.0).abs() < 1e-12);
        assert_eq!(t.grid().len(), 401);
    }

    #[test]
    fn brownian_resolvent() {
        let t = table(&bm());
        assert!((t.resolvent_density(1.0, 2.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let e = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((t.resolvent_density(2.0, 1.0).unwrap() - e).abs() < 1e-12);
        assert!(t.resolvent_density(1.0, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn brownian_exit_and_ruin() {
        let t = table(&bm());
        let v = t.exit_down_prob(1.0, 0.0, 2.0).unwrap();
        assert!((v - 1.0 / (E + 1.0)).abs() < 1e-12);
        assert!(t.exit_down_prob(1e-9, 0.0, 2.0).unwrap() > 1.0 - 1e-8);
        assert!(t.exit_down_prob(2.0 - 1e-9, 0.0, 2.0).unwrap() < 1e-8);
        assert!(matches!(t.exit_down_prob(3.0, 0.0, 2.0), Err(Error::Domain(_))));
        let m = bm();
        assert_eq!(ruin_laplace(&m, 0.3, 0.3, 1.0).unwrap(), 1.0);
        assert!((ruin_laplace(&m, 1.0, 0.0, 0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!((ruin_laplace(&m, 1.0, 0.0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn brownian_renewal_is_exact() {
        let t = table(&bm());
        for &y in &[0.01, 1.0, 7.5, 40.0] {
            let r = t.renewal_limit(1.0, y).unwrap();
            assert!((r.value - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
            assert!((r.limit - r.value).abs() < 1e-12);
        }
        assert!(t.renewal_limit(1e-12, 3.0).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn jump_model_renewal_tends_to_inverse_gamma() {
        // W = 4e^x − 2 so e^{−x}W(x+y) − W(y) = 2 − 2e^{−x} exactly
        let t = table(&cp());
        for &(x, y) in &[(0.5, 1.0), (3.0, 10.0), (20.0, 20.0)] {
            let r = t.renewal_limit(x, y).unwrap();
            assert!((r.value - 2.0 * (1.0 - (-x as f64).exp())).abs() < 1e-7, "{r:?}");
        }
    }

    #[test]
    fn laplace_round_trip_jump_model() {
        let t = table(&cp());
        let rt = t.laplace_round_trip(&[1.6, 2.0, 5.0]).unwrap();
        for r in rt {
            assert!(r.relative_error < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn csv_header_and_precision() {
        let g = vec![0.0, 1.0, 2.0];
        let t = compute_scale(&bm(), 0.0, &g, &ScaleOptions::default()).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("x,W,W_p,error_estimate\n"));
        assert!(csv.contains("\n1,1.71828182846,"));
    }

    #[test]
    fn bad_grid_is_rejected() {
        let o = ScaleOptions::default();
        assert!(compute_scale(&bm(), 0.0, &[0.1, 1.0], &o).is_err());
        assert!(compute_scale(&bm(), 0.0, &[0.0, 1.0, 1.0], &o).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn exit_prob_monotone(c in 0.0f64..1.0, dx in 0.01f64..1.0, dx2 in 0.01f64..1.0, db in 0.01f64..2.0) {
            let t = table(&cp());
            let x1 = c + dx;
            let x2 = x1 + dx2;
            let b = x2 + db;
            prop_assert!(t.exit_down_prob(x2, c, b).unwrap() <= t.exit_down_prob(x1, c, b).unwrap() + 1e-12);
        }

        #[test]
        fn resolvent_nonnegative(x in 0.01f64..10.0, y in 0.01f64..10.0) {
            prop_assert!(table(&cp()).resolvent_density(x, y).unwrap() >= 0.0);
        }
    }
}
