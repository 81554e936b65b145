//! Branching rate functions `R`, their weights `ω = 1/R` and the tail
//! integral `φ(x) = γ⁻¹ ∫_x^∞ dy/R(y)`.

use crate::error::{Error, Result};
use crate::numeric::quad::integrate_to_inf;
use crate::numeric::roots::decreasing_root;
use serde::{Deserialize, Serialize};

/// A weight `ω ≥ 0` driving an additive functional `∫ ω(ξ_s) ds`.
pub trait Weight: Send + Sync + std::fmt::Debug {
    fn omega(&self, x: f64) -> f64;

    /// `∫_x^∞ ω(y) dy` when available in closed form.
    fn tail(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// `ω ≡ q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWeight(pub f64);

impl Weight for ConstantWeight {
    fn omega(&self, _x: f64) -> f64 {
        self.0
    }

    fn tail(&self, _x: f64) -> Option<f64> {
        Some(if self.0 == 0.0 { 0.0 } else { f64::INFINITY })
    }
}

/// `factor · ω`.
#[derive(Debug, Clone)]
pub struct ScaledWeight<W> {
    pub factor: f64,
    pub inner: W,
}

impl<W: Weight> Weight for ScaledWeight<W> {
    fn omega(&self, x: f64) -> f64 {
        self.factor * self.inner.omega(x)
    }

    fn tail(&self, x: f64) -> Option<f64> {
        self.inner.tail(x).map(|t| self.factor * t)
    }
}

/// Growth of a tabulated rate beyond its last point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailSpec {
    /// `R(x) = R_n (x/x_n)^θ`
    Power { theta: f64 },
    /// `R(x) = R_n e^{λ(x − x_n)}`
    Exponential { lambda: f64 },
}

/// JSON description of `R`, e.g. `{"type":"power","c":1,"theta":2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    /// `R(x) = (c + x)^θ`
    Power { c: f64, theta: f64 },
    /// `R(x) = e^{λx}`
    Exponential { lambda: f64 },
    /// `R(x) = value`
    Constant { value: f64 },
    /// Log-linear interpolation through `points = [[x, R], ...]`.
    ///
    /// Below the first point `R(x) = R_0 (x/x_0)^a` with `a =
    /// left_exponent`; beyond the last point `right_tail` applies. A missing
    /// end is extrapolated from the two outermost points and marked as
    /// estimated.
    Tabulated {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        left_exponent: Option<f64>,
        #[serde(default)]
        right_tail: Option<TailSpec>,
    },
}

/// Behaviour of `R` at an end of `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndBehaviour {
    /// Near 0: `R(z) ≍ z^exponent`. At infinity: the tail law.
    pub exponent: f64,
    /// True when read off the specification rather than estimated.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    xs: Vec<f64>,
    log_r: Vec<f64>,
    left: f64,
    left_exact: bool,
    right: TailSpec,
    right_exact: bool,
}

/// A validated rate function.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    spec: RateSpec,
    table: Option<Table>,
}

impl RateFunction {
    pub fn new(spec: RateSpec) -> Result<Self> {
        let table = match &spec {
            RateSpec::Power { c, theta } => {
                if !(*c >= 0.0 && c.is_finite() && theta.is_finite()) {
                    return Err(Error::Domain(format!("power rate needs c ≥ 0 and finite θ, got c={c}, θ={theta}")));
                }
                None
            }
            RateSpec::Exponential { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::Domain(format!("exponential rate needs λ > 0, got {lambda}")));
                }
                None
            }
            RateSpec::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::Domain(format!("constant rate must be positive, got {value}")));
                }
                None
            }
            RateSpec::Tabulated {
                points,
                left_exponent,
                right_tail,
            } => Some(Self::build_table(points, *left_exponent, *right_tail)?),
        };
        Ok(RateFunction { spec, table })
    }

    fn build_table(points: &[[f64; 2]], left: Option<f64>, right: Option<TailSpec>) -> Result<Table> {
        if points.len() < 2 {
            return Err(Error::Domain("tabulated rate needs at least two points".into()));
        }
        if points.iter().any(|p| !(p[0] > 0.0 && p[1] > 0.0 && p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Domain("tabulated rate points must have x > 0 and R > 0".into()));
        }
        if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::Domain("tabulated rate abscissae must increase".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let log_r: Vec<f64> = points.iter().map(|p| p[1].ln()).collect();
        let n = xs.len();
        let log_slope = |i: usize, j: usize| (log_r[j] - log_r[i]) / (xs[j].ln() - xs[i].ln());
        let (left, left_exact) = match left {
            Some(a) if a.is_finite() => (a, true),
            Some(a) => return Err(Error::Domain(format!("left exponent must be finite, got {a}"))),
            None => (log_slope(0, 1), false),
        };
        let (right, right_exact) = match right {
            Some(TailSpec::Exponential { lambda }) if !(lambda > 0.0 && lambda.is_finite()) => {
                return Err(Error::Domain(format!("exponential tail needs λ > 0, got {lambda}")))
            }
            Some(TailSpec::Power { theta }) if !theta.is_finite() => {
                return Err(Error::Domain(format!("power tail needs finite θ, got {theta}")))
            }
            Some(t) => (t, true),
            None => (TailSpec::Power { theta: log_slope(n - 2, n - 1) }, false),
        };
        Ok(Table {
            xs,
            log_r,
            left,
            left_exact,
            right,
            right_exact,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: RateSpec = serde_json::from_str(text).map_err(|e| Error::config("rate", e.to_string()))?;
        Self::new(spec)
    }

    pub fn power(c: f64, theta: f64) -> Result<Self> {
        Self::new(RateSpec::Power { c, theta })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(RateSpec::Exponential { lambda })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(RateSpec::Constant { value })
    }

    pub fn spec(&self) -> &RateSpec {
        &self.spec
    }

    /// `R(x)` for `x > 0` (and at 0 where finite).
    pub fn rate(&self, x: f64) -> f64 {
        match (&self.spec, &self.table) {
            (RateSpec::Power { c, theta }, _) => (c + x).powf(*theta),
            (RateSpec::Exponential { lambda }, _) => (lambda * x).exp(),
            (RateSpec::Constant { value }, _) => *value,
            (_, Some(t)) => t.log_rate(x).exp(),
            _ => unreachable!("tabulated rate always carries its table"),
        }
    }

    /// Closed-form `∫_x^∞ dy/R(y)`, `+∞` when divergent.
    pub fn tail_integral(&self, x: f64) -> f64 {
        match (&self.spec, &self.table) {
            (RateSpec::Power { c, theta }, _) => {
                if *theta > 1.0 {
                    (c + x).powf(1.0 - theta) / (theta - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            (RateSpec::Exponential { lambda }, _) => (-lambda * x).exp() / lambda,
            (RateSpec::Constant { .. }, _) => f64::INFINITY,
            (_, Some(t)) => t.tail_integral(x),
            _ => unreachable!(),
        }
    }

    /// Behaviour of `R` near 0.
    pub fn near_zero(&self) -> EndBehaviour {
        match (&self.spec, &self.table) {
            (RateSpec::Power { c, theta }, _) => EndBehaviour {
                exponent: if *c == 0.0 { *theta } else { 0.0 },
                exact: true,
            },
            (_, Some(t)) => EndBehaviour {
                exponent: t.left,
                exact: t.left_exact,
            },
            _ => EndBehaviour {
                exponent: 0.0,
                exact: true,
            },
        }
    }

    /// Tail law of `R` at infinity.
    pub fn at_infinity(&self) -> (TailSpec, bool) {
        match (&self.spec, &self.table) {
            (RateSpec::Power { theta, .. }, _) => (TailSpec::Power { theta: *theta }, true),
            (RateSpec::Exponential { lambda }, _) => (TailSpec::Exponential { lambda: *lambda }, true),
            (RateSpec::Constant { .. }, _) => (TailSpec::Power { theta: 0.0 }, true),
            (_, Some(t)) => (t.right, t.right_exact),
            _ => unreachable!(),
        }
    }

    /// `φ(x) = γ⁻¹ ∫_x^∞ dy/R(y)`.
    pub fn phi(&self, x: f64, gamma: f64) -> Result<f64> {
        let t = self.tail_integral(x);
        if t.is_infinite() {
            return Err(Error::precondition("H0", "∫^∞ dy/R(y) diverges"));
        }
        Ok(t / gamma)
    }

    /// `φ⁻¹(t) = sup{s ≥ 0 : φ(s) > t}` (0 when the set is empty).
    pub fn phi_inverse(&self, t: f64, gamma: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("φ⁻¹ needs t > 0, got {t}")));
        }
        if self.tail_integral(1.0).is_infinite() {
            return Err(Error::precondition("H0", "∫^∞ dy/R(y) diverges"));
        }
        let s = match self.spec {
            RateSpec::Power { c, theta } => (gamma * (theta - 1.0) * t).powf(-1.0 / (theta - 1.0)) - c,
            RateSpec::Exponential { lambda } => -(lambda * gamma * t).ln() / lambda,
            _ => {
                if self.tail_integral(0.0) / gamma <= t {
                    return Ok(0.0);
                }
                let mut hi = 1.0;
                while self.phi(hi, gamma)? > t {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return Err(Error::Numeric(format!("φ⁻¹({t}) beyond representable range")));
                    }
                }
                decreasing_root(|s| self.tail_integral(s) / gamma, 0.0, hi, t, 1e-15)?
            }
        };
        Ok(s.max(0.0))
    }
}

impl Weight for RateFunction {
    fn omega(&self, x: f64) -> f64 {
        1.0 / self.rate(x)
    }

    fn tail(&self, x: f64) -> Option<f64> {
        Some(self.tail_integral(x))
    }
}

impl Table {
    fn log_rate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.log_r[0] + self.left * (x / self.xs[0]).ln();
        }
        if x >= self.xs[n - 1] {
            return self.log_r[n - 1]
                + match self.right {
                    TailSpec::Power { theta } => theta * (x / self.xs[n - 1]).ln(),
                    TailSpec::Exponential { lambda } => lambda * (x - self.xs[n - 1]),
                };
        }
        let j = self.xs.partition_point(|&v| v <= x);
        let w = (x - self.xs[j - 1]) / (self.xs[j] - self.xs[j - 1]);
        self.log_r[j - 1] * (1.0 - w) + self.log_r[j] * w
    }

    /// `∫_a^b e^{−ℓ(y)} dy` for `ℓ` linear between the given end values.
    fn segment(a: f64, b: f64, la: f64, lb: f64) -> f64 {
        let slope = (lb - la) / (b - a);
        let len = b - a;
        // e^{−la} ∫_0^len e^{−slope·u} du
        (-la).exp() * len * crate::numeric::one_minus_exp_over(slope * len)
    }

    fn right_tail_integral(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let (xn, rn) = (self.xs[n - 1], self.log_r[n - 1].exp());
        match self.right {
            TailSpec::Power { theta } if theta > 1.0 => xn.powf(theta) / rn * x.powf(1.0 - theta) / (theta - 1.0),
            TailSpec::Power { .. } => f64::INFINITY,
            TailSpec::Exponential { lambda } => (-lambda * (x - xn)).exp() / (rn * lambda),
        }
    }

    fn tail_integral(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let right = self.right_tail_integral(x.max(self.xs[n - 1]));
        if x >= self.xs[n - 1] || right.is_infinite() {
            return right;
        }
        let mut total = right;
        let start = self.xs.partition_point(|&v| v <= x);
        let first_full = if start == 0 { 1 } else { start + 1 };
        if start == 0 {
            // piece below the first tabulated point
            let (x0, r0, a) = (self.xs[0], self.log_r[0].exp(), self.left);
            let piece = if (a - 1.0).abs() < 1e-12 {
                x0 / r0 * (x0 / x).ln()
            } else {
                x0.powf(a) / r0 * (x0.powf(1.0 - a) - x.powf(1.0 - a)) / (1.0 - a)
            };
            if !piece.is_finite() {
                return f64::INFINITY;
            }
            total += piece;
        } else {
            let lx = self.log_rate(x);
            total += Self::segment(x, self.xs[start], lx, self.log_r[start]);
        }
        for j in first_full..n {
            total += Self::segment(self.xs[j - 1], self.xs[j], self.log_r[j - 1], self.log_r[j]);
        }
        total
    }
}

/// `∫_x^∞ ω` using the closed form when the weight provides one.
pub(crate) fn weight_tail(weight: &dyn Weight, x: f64) -> f64 {
    weight
        .tail(x)
        .unwrap_or_else(|| integrate_to_inf(|y| weight.omega(y), x, 1e-14, 1e-10).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::numeric::quad::integrate;

    #[test]
    fn power_phi_examples() {
        let r = RateFunction::power(1.0, 2.0).unwrap();
        for &x in &[0.0, 1.0, 9.0, 99.0] {
            assert!((r.phi(x, 1.0).unwrap() - 1.0 / (1.0 + x)).abs() < 1e-15);
        }
        for &t in &[0.5, 0.01, 1e-6] {
            assert!((r.phi_inverse(t, 1.0).unwrap() - (1.0 / t - 1.0)).abs() < 1e-9 / t);
        }
        assert!((r.phi_inverse(r.phi(5.0, 1.0).unwrap(), 1.0).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_phi_examples() {
        let r = RateFunction::exponential(1.0).unwrap();
        assert!((r.phi(30.0, 1.0).unwrap() - (-30.0f64).exp()).abs() < 1e-25);
        let r2 = RateFunction::exponential(2.0).unwrap();
        assert!((r2.phi(1.0, 0.5).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((r2.phi_inverse(r2.phi(5.0, 0.5).unwrap(), 0.5).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_rate_has_no_phi() {
        let r = RateFunction::constant(1.0).unwrap();
        assert!(matches!(r.phi(1.0, 1.0), Err(Error::Precondition { .. })));
    }

    #[test]
    fn tabulated_matches_exact_power() {
        // x² sampled on a grid, with exact end exponents, reproduces the
        // tail integral up to interpolation error between points
        let pts: Vec<[f64; 2]> = (0..=400).map(|k| {
            let x = 0.5 + k as f64 * 0.05;
            [x, x * x]
        }).collect();
        let r = RateFunction::new(RateSpec::Tabulated {
            points: pts,
            left_exponent: Some(2.0),
            right_tail: Some(TailSpec::Power { theta: 2.0 }),
        })
        .unwrap();
        let exact = RateFunction::power(0.0, 2.0).unwrap();
        for &x in &[0.3, 1.0, 5.0, 19.0, 30.0] {
            let a = r.tail_integral(x);
            let b = exact.tail_integral(x);
            // log-linear interpolation of ln x² with step 0.05 is off by ~h²/x²
            assert!((a - b).abs() < 1e-3 * b, "x={x}: {a} vs {b}");
        }
        let t = r.phi(3.0, 1.0).unwrap();
        assert!((r.phi_inverse(t, 1.0).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tabulated_quadrature_cross_check() {
        let r = RateFunction::from_json(
            r#"{"type":"tabulated","points":[[1,2],[2,5],[4,30]],"right_tail":{"type":"exponential","lambda":1.5}}"#,
        )
        .unwrap();
        for &x in &[0.5, 1.0, 1.7, 3.0, 6.0] {
            // split at the table points so each piece is smooth
            let mut cuts: Vec<f64> = [1.0, 2.0, 4.0].into_iter().filter(|&c| c > x).collect();
            cuts.insert(0, x);
            let last = *cuts.last().unwrap();
            let mut q = integrate_to_inf(|y| r.omega(y), last, 1e-14, 1e-12).value;
            for w in cuts.windows(2) {
                q += integrate(|y| r.omega(y), w[0], w[1], 1e-14, 1e-12).value;
            }
            assert!((r.tail_integral(x) - q).abs() < 1e-9, "x={x}: {} vs {q}", r.tail_integral(x));
        }
        assert!(!r.near_zero().exact);
    }

    #[test]
    fn json_forms() {
        let r = RateFunction::from_json(r#"{"type":"power","c":1,"theta":2}"#).unwrap();
        assert_eq!(r.rate(1.0), 4.0);
        assert!(RateFunction::from_json(r#"{"type":"power","c":1}"#).is_err());
        assert!(RateFunction::from_json(r#"{"type":"exponential","lambda":-1}"#).is_err());
    }

    proptest! {
        #[test]
        fn phi_decreasing_and_round_trip(x in 0.0f64..50.0, dx in 0.01f64..10.0) {
            for r in [RateFunction::power(1.0, 2.0).unwrap(), RateFunction::power(0.5, 3.5).unwrap(), RateFunction::exponential(0.7).unwrap()] {
                let a = r.phi(x, 0.8).unwrap();
                let b = r.phi(x + dx, 0.8).unwrap();
                prop_assert!(b < a);
                let back = r.phi_inverse(a, 0.8).unwrap();
                prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x));
            }
        }
    }
}
