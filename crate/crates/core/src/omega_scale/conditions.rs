//! Integral tests for extinction, explosion and the standing hypotheses on
//! the rate function.
//!
//! Every test compares an endpoint exponent of `R` with that of the
//! integrand's other factor. Exponents read from the rate specification give
//! a definite answer; exponents estimated from tabulated data give one only
//! when they clear the critical value by [`ESTIMATE_MARGIN`].

use super::rate::{RateFunction, TailSpec};
use crate::error::Result;
use crate::levy_model::{JumpSpec, LevyModel};
use serde::Serialize;

/// Minimum distance from the critical exponent for an estimated exponent to
/// decide a test.
pub const ESTIMATE_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Positive-probability boundary behaviour of the time-changed process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryReport {
    pub extinction: Verdict,
    pub explosion: Verdict,
}

/// Status of the hypotheses on `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `∫^∞ dz/R(z) < ∞`
    pub h0: Verdict,
    /// `∫_{0+}^∞ W_p(z)/R(z) dz < ∞`
    pub h1: Verdict,
    /// Index in `φ(x+y)/φ(y) → e^{−λx}`, when H0 holds.
    pub lambda: Option<f64>,
    /// Whether `lambda` is read from the specification.
    pub lambda_exact: bool,
}

/// Exponent `e` with `W(z) ≍ z^e` as `z → 0`.
fn scale_exponent_at_zero(model: &LevyModel) -> f64 {
    if model.sigma2() > 0.0 {
        return 1.0;
    }
    match model.jumps().spec() {
        JumpSpec::PowerTail { exponent, .. } if *exponent > 1.0 => exponent - 1.0,
        _ => 0.0,
    }
}

/// Exponent `g` with `W_p(z) ≍ z^g` as `z → ∞`.
fn scale_growth_at_infinity(model: &LevyModel) -> f64 {
    if model.p() > 0.0 || model.gamma() < 0.0 {
        0.0
    } else {
        1.0
    }
}

/// Is `∫_0 z^{e} / R(z) dz` finite?
fn zero_integral(rate: &RateFunction, e: f64) -> Verdict {
    let near = rate.near_zero();
    decide(e + 1.0 - near.exponent, near.exact)
}

/// Is `∫^∞ z^{g} / R(z) dz` finite?
fn infinity_integral(rate: &RateFunction, g: f64) -> Verdict {
    match rate.at_infinity() {
        (TailSpec::Exponential { .. }, _) => Verdict::Yes,
        (TailSpec::Power { theta }, exact) => decide(theta - (g + 1.0), exact),
    }
}

/// Convergent iff `margin > 0`.
fn decide(margin: f64, exact: bool) -> Verdict {
    if exact || margin.abs() >= ESTIMATE_MARGIN {
        Verdict::from_bool(margin > 0.0)
    } else {
        Verdict::Inconclusive
    }
}

/// Extinction and explosion tests.
pub fn classify_boundaries(model: &LevyModel, rate: &RateFunction) -> Result<BoundaryReport> {
    let extinction = if model.is_subordinator() {
        Verdict::No
    } else {
        zero_integral(rate, scale_exponent_at_zero(model))
    };
    let (p, gamma) = (model.p(), model.gamma());
    let explosion = if p == 0.0 || gamma <= 0.0 {
        Verdict::No
    } else if gamma.is_infinite() {
        Verdict::Inconclusive
    } else {
        infinity_integral(rate, 0.0)
    };
    Ok(BoundaryReport { extinction, explosion })
}

/// H0, H1 and the H2 index.
pub fn check_h0_h1_h2(model: &LevyModel, rate: &RateFunction) -> Result<ConditionReport> {
    let h0 = infinity_integral(rate, 0.0);
    let at_zero = zero_integral(rate, scale_exponent_at_zero(model));
    let h1 = at_zero.and(infinity_integral(rate, scale_growth_at_infinity(model)));
    let (lambda, lambda_exact) = if h0 == Verdict::No {
        (None, true)
    } else {
        match rate.at_infinity() {
            (TailSpec::Power { .. }, exact) => (Some(0.0), exact),
            (TailSpec::Exponential { lambda }, exact) => (Some(lambda), exact),
        }
    };
    Ok(ConditionReport {
        h0,
        h1,
        lambda,
        lambda_exact,
    })
}
