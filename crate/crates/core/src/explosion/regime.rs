//! `φ`, its inverse, the index `λ` of `φ(x+y)/φ(y) → e^{−λx}` and the
//! tail-integral asymptotics used by the fast regime.

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, integrate_to_inf};
use crate::omega_scale::{RateFunction, RateSpec, Verdict, Weight};
use serde::Serialize;

/// `φ(x) = γ⁻¹∫_x^∞ dy/R(y)` and `φ⁻¹(t) = sup{s : φ(s) > t}`.
#[derive(Debug, Clone)]
pub struct PhiFunctions {
    rate: RateFunction,
    gamma: f64,
}

/// Build `φ` and `φ⁻¹`; fails unless `∫^∞ dy/R(y) < ∞`.
pub fn phi_and_inverse(rate: &RateFunction, gamma: f64) -> Result<PhiFunctions> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("φ needs 0 < γ < ∞, got {gamma}")));
    }
    if rate.tail_integral(1.0).is_infinite() {
        return Err(Error::precondition("H0", "∫^∞ dy/R(y) diverges"));
    }
    Ok(PhiFunctions {
        rate: rate.clone(),
        gamma,
    })
}

impl PhiFunctions {
    pub fn phi(&self, x: f64) -> f64 {
        self.rate.tail_integral(x) / self.gamma
    }

    pub fn inverse(&self, t: f64) -> Result<f64> {
        self.rate.phi_inverse(t, self.gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Largest `|φ(φ⁻¹(t)) − t|/t` over `ts`, skipping `t ≥ φ(0)`.
    pub fn round_trip_error(&self, ts: &[f64]) -> Result<f64> {
        let top = self.phi(0.0);
        let mut worst: f64 = 0.0;
        for &t in ts.iter().filter(|&&t| t < top) {
            let back = self.phi(self.inverse(t)?);
            worst = worst.max(((back - t) / t).abs());
        }
        Ok(worst)
    }
}

/// Slow (`λ = 0`) or fast (`λ > 0`) explosion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    A,
    B,
}

/// Status and limiting value of an asymptotic side condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideCondition {
    pub holds: Verdict,
    /// Limit (or last evaluated value) of the defining ratio, when finite.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub lambda: Option<f64>,
    pub regime: Option<Regime>,
    /// Read from the rate specification rather than estimated.
    pub exact: bool,
    /// `(y, λ̂(y))` with `λ̂(y) = −log(φ(y+1)/φ(y))`.
    pub estimates: Vec<(f64, f64)>,
    /// Spread of the last extrapolated estimates.
    pub spread: f64,
    /// `limsup φ(x)^{−2} ∫_x^∞ R(y)^{−2} dy < ∞` (fast regime).
    pub square_tail: SideCondition,
    /// `liminf φ(y)/φ(2y) > 1` (slow regime).
    pub contraction: SideCondition,
}

const PROBE_DOUBLINGS: usize = 6;

/// Classify the explosion regime of `R`.
pub fn estimate_lambda(rate: &RateFunction, gamma: f64) -> Result<RegimeReport> {
    let phi = phi_and_inverse(rate, gamma)?;
    let base = match rate.spec() {
        RateSpec::Tabulated { points, .. } => points.last().map_or(1.0, |p| p[0].max(1.0)),
        _ => 1.0,
    };
    let ys: Vec<f64> = (0..PROBE_DOUBLINGS).map(|k| base * 2f64.powi(k as i32 + 1)).collect();
    let estimates: Vec<(f64, f64)> = ys.iter().map(|&y| (y, -(phi.phi(y + 1.0) / phi.phi(y)).ln())).collect();
    // λ̂(y) ≈ λ + a/y: extrapolate consecutive doublings
    let extrapolated: Vec<f64> = estimates.windows(2).map(|w| 2.0 * w[1].1 - w[0].1).collect();
    let tail3 = &extrapolated[extrapolated.len() - 3..];
    let spread = tail3.iter().copied().fold(f64::NEG_INFINITY, f64::max) - tail3.iter().copied().fold(f64::INFINITY, f64::min);
    let numeric = *extrapolated.last().unwrap();

    let (lambda, exact) = match rate.spec() {
        RateSpec::Power { .. } => (Some(0.0), true),
        RateSpec::Exponential { lambda } => (Some(*lambda), true),
        _ => {
            let scale = numeric.abs().max(1e-3);
            if spread <= 0.05 * scale.max(0.02) {
                (Some(if numeric.abs() < 1e-3 { 0.0 } else { numeric }), false)
            } else {
                (None, false)
            }
        }
    };
    let regime = lambda.map(|l| if l == 0.0 { Regime::A } else { Regime::B });

    let (square_tail, contraction) = match rate.spec() {
        RateSpec::Power { theta, .. } => {
            let contraction = SideCondition {
                holds: Verdict::Yes,
                value: Some(2f64.powf(theta - 1.0)),
            };
            // φ^{−2}∫(c+y)^{−2θ} = γ²(θ−1)²/((2θ−1)(c+x)) → 0
            (
                SideCondition {
                    holds: Verdict::Yes,
                    value: Some(0.0),
                },
                contraction,
            )
        }
        RateSpec::Exponential { lambda } => (
            SideCondition {
                holds: Verdict::Yes,
                value: Some(gamma * gamma * lambda / 2.0),
            },
            SideCondition {
                holds: Verdict::Yes,
                value: None,
            },
        ),
        _ => numeric_side_conditions(rate, &phi, &ys),
    };
    Ok(RegimeReport {
        lambda,
        regime,
        exact,
        estimates,
        spread,
        square_tail,
        contraction,
    })
}

fn numeric_side_conditions(rate: &RateFunction, phi: &PhiFunctions, ys: &[f64]) -> (SideCondition, SideCondition) {
    let sq: Vec<f64> = ys
        .iter()
        .map(|&y| {
            let w2 = integrate_to_inf(|z| rate.omega(z).powi(2), y, 0.0, 1e-10).value;
            w2 / phi.phi(y).powi(2)
        })
        .collect();
    let last = sq[sq.len() - 1];
    let prev = sq[sq.len() - 2];
    let square = if last.is_finite() && (last - prev).abs() <= 0.1 * last.abs().max(1e-12) {
        SideCondition {
            holds: Verdict::Yes,
            value: Some(last),
        }
    } else if last > 2.0 * prev && prev > 2.0 * sq[sq.len() - 3] {
        SideCondition {
            holds: Verdict::No,
            value: None,
        }
    } else {
        SideCondition {
            holds: Verdict::Inconclusive,
            value: Some(last),
        }
    };
    let ratios: Vec<f64> = ys.iter().map(|&y| phi.phi(y) / phi.phi(2.0 * y)).collect();
    let min_tail = ratios[ratios.len() - 3..].iter().copied().fold(f64::INFINITY, f64::min);
    let contraction = SideCondition {
        holds: if min_tail > 1.0 + 1e-3 {
            Verdict::Yes
        } else {
            Verdict::Inconclusive
        },
        value: min_tail.is_finite().then_some(min_tail),
    };
    (square, contraction)
}

/// Which part of the tail-integral asymptotics a row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailCase {
    /// `λ = 0`: `e^{−αx}∫_1^x e^{αy}f / ∫_x^∞ f → 0`.
    Slow,
    /// `λ > α`: `(λ−α)∫_x^∞ e^{α(y−x)}f / ∫_x^∞ f → 1`.
    Fast,
    /// `λ > 0`: `k(t)/(−λ⁻¹ log t) → 1` for the inverse `k` of the tail.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub case: TailCase,
    /// `x` for the integral cases, `t` for the inverse case.
    pub argument: f64,
    pub ratio: f64,
    /// Fast case only: `λ∫_x^∞ e^{α(y−x)}∫_y^∞ f / ∫_x^∞ e^{α(y−x)} f`.
    pub double_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailAsymptotics {
    pub lambda: f64,
    pub alpha: f64,
    pub rows: Vec<TailRow>,
    /// Distance to the limit shrinks along the rows of each case.
    pub trend_ok: bool,
}

/// Numeric ratios for `f = ω/γ` along `xs` (integral cases) and along
/// `t = φ(x)` for the same `xs` (inverse case).
pub fn prop46_checks(rate: &RateFunction, gamma: f64, alpha: f64, xs: &[f64]) -> Result<TailAsymptotics> {
    let report = estimate_lambda(rate, gamma)?;
    let lambda = report
        .lambda
        .ok_or_else(|| Error::Numeric("λ could not be estimated for this rate".into()))?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("α must be positive, got {alpha}")));
    }
    if lambda > 0.0 && alpha >= lambda {
        return Err(Error::Domain(format!("need α < λ = {lambda}, got α = {alpha}")));
    }
    let phi = phi_and_inverse(rate, gamma)?;
    let f = |y: f64| rate.omega(y) / gamma;
    let mut rows = Vec::new();
    for &x in xs {
        let tail = phi.phi(x);
        if lambda == 0.0 {
            let lo = 1.0f64.min(x);
            let head = integrate(|y| (alpha * (y - x)).exp() * f(y), lo, x, 0.0, 1e-10).value;
            rows.push(TailRow {
                case: TailCase::Slow,
                argument: x,
                ratio: head / tail,
                double_ratio: None,
            });
        } else {
            let single = integrate_to_inf(|y| (alpha * (y - x)).exp() * f(y), x, 0.0, 1e-10).value;
            let double = integrate_to_inf(|y| (alpha * (y - x)).exp() * phi.phi(y), x, 0.0, 1e-10).value;
            rows.push(TailRow {
                case: TailCase::Fast,
                argument: x,
                ratio: (lambda - alpha) * single / tail,
                double_ratio: Some(lambda * double / single),
            });
        }
    }
    if lambda > 0.0 {
        for &x in xs {
            let t = phi.phi(x);
            if t > 0.0 && t < 1.0 {
                let k = phi.inverse(t)?;
                rows.push(TailRow {
                    case: TailCase::Inverse,
                    argument: t,
                    ratio: k / (-t.ln() / lambda),
                    double_ratio: None,
                });
            }
        }
    }
    let trend_ok = [TailCase::Slow, TailCase::Fast, TailCase::Inverse].iter().all(|case| {
        let target = if *case == TailCase::Slow { 0.0 } else { 1.0 };
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.case == *case)
            .map(|r| (r.ratio - target).abs())
            .collect();
        gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    });
    Ok(TailAsymptotics {
        lambda,
        alpha,
        rows,
        trend_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_phi_closed_form() {
        let r = RateFunction::power(1.0, 2.0).unwrap();
        let p = phi_and_inverse(&r, 1.0).unwrap();
        for &x in &[0.0, 0.5, 3.0, 100.0] {
            assert!((p.phi(x) - 1.0 / (1.0 + x)).abs() < 1e-15);
        }
        for &t in &[0.9, 0.1, 1e-4] {
            assert!((p.inverse(t).unwrap() - (1.0 / t - 1.0)).abs() < 1e-9 / t);
        }
        assert!((p.inverse(p.phi(5.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!(p.round_trip_error(&[0.5, 0.1, 1e-3, 1e-6]).unwrap() < 1e-10);
    }

    #[test]
    fn exponential_phi_closed_form() {
        let r = RateFunction::exponential(1.5).unwrap();
        let p = phi_and_inverse(&r, 2.0).unwrap();
        assert!((p.phi(1.0) - (-1.5f64).exp() / 3.0).abs() < 1e-15);
        assert!(p.round_trip_error(&[0.1, 1e-5, 1e-12]).unwrap() < 1e-10);
    }

    #[test]
    fn constant_rate_has_no_phi() {
        let r = RateFunction::constant(1.0).unwrap();
        assert!(matches!(phi_and_inverse(&r, 1.0), Err(Error::Precondition { .. })));
    }

    #[test]
    fn regimes_of_reference_rates() {
        let a = estimate_lambda(&RateFunction::power(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert_eq!((a.lambda, a.regime), (Some(0.0), Some(Regime::A)));
        assert_eq!(a.contraction.holds, Verdict::Yes);
        assert_eq!(a.contraction.value, Some(2.0));
        let b = estimate_lambda(&RateFunction::exponential(1.0).unwrap(), 1.0).unwrap();
        assert_eq!((b.lambda, b.regime), (Some(1.0), Some(Regime::B)));
        assert_eq!(b.square_tail.value, Some(0.5));
        let b2 = estimate_lambda(&RateFunction::exponential(2.0).unwrap(), 1.0).unwrap();
        assert_eq!(b2.lambda, Some(2.0));
    }

    #[test]
    fn tabulated_rates_are_estimated() {
        let exp_tab = RateFunction::from_json(
            r#"{"type":"tabulated","points":[[0.5,1.6487212707001282],[1,2.718281828459045],[2,7.38905609893065]],"right_tail":{"type":"exponential","lambda":1}}"#,
        )
        .unwrap();
        let r = estimate_lambda(&exp_tab, 1.0).unwrap();
        assert!(!r.exact);
        assert!((r.lambda.unwrap() - 1.0).abs() < 1e-6, "{:?}", r.lambda);
        assert_eq!(r.regime, Some(Regime::B));
        assert!((r.square_tail.value.unwrap() - 0.5).abs() < 0.01);
        let pow_tab = RateFunction::from_json(r#"{"type":"tabulated","points":[[1,4],[2,9],[3,16]],"right_tail":{"type":"power","theta":2}}"#).unwrap();
        let r = estimate_lambda(&pow_tab, 1.0).unwrap();
        assert_eq!(r.regime, Some(Regime::A));
        assert_eq!(r.contraction.holds, Verdict::Yes);
    }

    #[test]
    fn fast_case_ratio_tends_to_one() {
        // f = e^{−y}, α = 1/2: (λ−α)∫_x^∞ e^{α(y−x)} f / ∫_x^∞ f = 1 exactly
        let r = RateFunction::exponential(1.0).unwrap();
        let t = prop46_checks(&r, 1.0, 0.5, &[5.0, 10.0, 20.0]).unwrap();
        for row in t.rows.iter().filter(|r| r.case == TailCase::Fast) {
            assert!((row.ratio - 1.0).abs() < 1e-8, "{row:?}");
            assert!((row.double_ratio.unwrap() - 1.0).abs() < 1e-8);
        }
        for row in t.rows.iter().filter(|r| r.case == TailCase::Inverse) {
            assert!((row.ratio - 1.0).abs() < 1e-9);
        }
        assert!(matches!(prop46_checks(&r, 1.0, 1.0, &[5.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn slow_case_ratio_tends_to_zero() {
        let r = RateFunction::power(1.0, 2.0).unwrap();
        let xs = [10.0, 100.0, 1000.0];
        let t = prop46_checks(&r, 1.0, 1.0, &xs).unwrap();
        assert!(t.trend_ok);
        for (row, &x) in t.rows.iter().zip(&xs) {
            let inner = integrate(|y| (y - x).exp() / (1.0 + y).powi(2), 1.0, x, 1e-14, 1e-12).value;
            assert!((row.ratio - inner * (1.0 + x)).abs() < 1e-8 * row.ratio, "{row:?}");
            // Σ (k+1)!/(1+x)^{k+1} asymptotically
            assert!(row.ratio * (1.0 + x) < 1.0 + 3.0 / (1.0 + x));
        }
    }
}
