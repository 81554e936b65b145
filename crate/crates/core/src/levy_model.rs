//! Spectrally positive Lévy processes given by their triplet.
//!
//! Sign convention: `ψ(s) = log E[e^{-s ξ_1}]`, so
//!
//! ```text
//! ψ(s) = σ²s²/2 − μs + ∫ (e^{−sx} − 1 + sx·1(x<1)) Π(dx),   s ≥ 0,
//! ```
//!
//! `p = Φ(0)` is the largest root of `ψ` and `γ = E ξ_1 = μ + ∫_1^∞ x Π(dx)`.
//! A model with `γ > 0` drifts to `+∞`; `p > 0` iff `γ > 0`.

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, integrate_to_inf};
use crate::numeric::roots::upper_crossing;
use crate::numeric::{exp_m1_plus, one_minus_exp_over};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-10;

/// Jump-size law of a compound Poisson component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDensity {
    Exponential { beta: f64 },
    Gamma { shape: f64, beta: f64 },
}

impl JumpDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            JumpDensity::Exponential { beta } => beta * (-beta * x).exp(),
            JumpDensity::Gamma { shape, beta } => {
                ((shape * beta.ln() + (shape - 1.0) * x.ln() - beta * x) - ln_gamma(shape)).exp()
            }
        }
    }

    /// `E[e^{-zX}]` on its domain of analyticity.
    pub fn laplace(&self, z: Complex64) -> Complex64 {
        match *self {
            JumpDensity::Exponential { beta } => beta / (beta + z),
            JumpDensity::Gamma { shape, beta } => ((beta / (beta + z)).ln() * shape).exp(),
        }
    }

    fn rate_param(&self) -> f64 {
        match *self {
            JumpDensity::Exponential { beta } | JumpDensity::Gamma { beta, .. } => beta,
        }
    }

    fn tilted(&self, alpha: f64) -> JumpDensity {
        match *self {
            JumpDensity::Exponential { beta } => JumpDensity::Exponential { beta: beta + alpha },
            JumpDensity::Gamma { shape, beta } => JumpDensity::Gamma {
                shape,
                beta: beta + alpha,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            JumpDensity::Exponential { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::Model(format!("exponential jump density needs beta > 0, got {beta}")))
            }
            JumpDensity::Gamma { shape, beta } if !(shape > 0.0 && beta > 0.0 && shape.is_finite() && beta.is_finite()) => {
                Err(Error::Model(format!("gamma jump density needs shape, beta > 0, got ({shape}, {beta})")))
            }
            _ => Ok(()),
        }
    }
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Serialisable description of the Lévy measure `Π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    #[default]
    None,
    /// `Π(dx) = rate · density(x) dx`.
    CompoundPoisson { rate: f64, density: JumpDensity },
    /// `Π(dx) = coefficient · x^{-1-exponent} e^{-tempering·x} dx` on
    /// `(0, ∞)`; `epsilon` is the small-jump truncation used by the
    /// simulator.
    PowerTail {
        coefficient: f64,
        exponent: f64,
        #[serde(default)]
        tempering: f64,
        epsilon: f64,
    },
}

/// Moments of `Π` computed once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCheck {
    /// `∫_0^1 x² Π(dx)`
    pub small_second: f64,
    /// `Π([1, ∞))`
    pub large_mass: f64,
    /// `∫_0^1 x Π(dx)` (infinite for unbounded variation)
    pub small_first: f64,
    /// `∫_1^∞ x Π(dx)` (infinite when `γ = ∞`)
    pub large_first: f64,
}

impl MassCheck {
    /// `∫ (1 ∧ x²) Π(dx)`.
    pub fn total(&self) -> f64 {
        self.small_second + self.large_mass
    }
}

/// Lévy measure with its precomputed integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure {
    spec: JumpSpec,
    mass: MassCheck,
}

impl JumpMeasure {
    pub fn new(spec: JumpSpec) -> Result<Self> {
        match spec {
            JumpSpec::None => {}
            JumpSpec::CompoundPoisson { rate, density } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::Model(format!("compound Poisson rate must be positive, got {rate}")));
                }
                density.validate()?;
            }
            JumpSpec::PowerTail {
                coefficient,
                exponent,
                tempering,
                epsilon,
            } => {
                if !(coefficient > 0.0 && coefficient.is_finite()) {
                    return Err(Error::Model(format!("power-tail coefficient must be positive, got {coefficient}")));
                }
                if !(exponent > 0.0 && exponent < 2.0) || exponent == 1.0 {
                    return Err(Error::Model(format!(
                        "power-tail exponent must lie in (0,1) ∪ (1,2), got {exponent}"
                    )));
                }
                if !(tempering >= 0.0 && tempering.is_finite()) {
                    return Err(Error::Model(format!("tempering must be ≥ 0, got {tempering}")));
                }
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::Model(format!("power-tail truncation epsilon must be > 0, got {epsilon}")));
                }
            }
        }
        let mut m = JumpMeasure {
            spec,
            mass: MassCheck {
                small_second: 0.0,
                large_mass: 0.0,
                small_first: 0.0,
                large_first: 0.0,
            },
        };
        if !m.is_none() {
            m.mass = m.compute_mass()?;
        }
        Ok(m)
    }

    pub fn spec(&self) -> &JumpSpec {
        &self.spec
    }

    pub fn mass(&self) -> &MassCheck {
        &self.mass
    }

    pub fn is_none(&self) -> bool {
        matches!(self.spec, JumpSpec::None)
    }

    pub fn finite_activity(&self) -> bool {
        !matches!(self.spec, JumpSpec::PowerTail { .. })
    }

    pub fn bounded_variation(&self) -> bool {
        self.mass.small_first.is_finite()
    }

    /// Lévy density `Π(dx)/dx`.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.spec {
            JumpSpec::None => 0.0,
            JumpSpec::CompoundPoisson { rate, density } => rate * density.pdf(x),
            JumpSpec::PowerTail {
                coefficient,
                exponent,
                tempering,
                ..
            } => coefficient * x.powf(-1.0 - exponent) * (-tempering * x).exp(),
        }
    }

    fn compute_mass(&self) -> Result<MassCheck> {
        let d = |x: f64| self.density(x);
        let (alpha, kappa) = match self.spec {
            JumpSpec::PowerTail { exponent, tempering, .. } => (exponent, tempering),
            _ => (0.0, 1.0),
        };
        let small_second = integrate(|x| x * x * d(x), 0.0, 1.0, ABS_TOL, REL_TOL).value;
        let large_mass = integrate_to_inf(d, 1.0, ABS_TOL, REL_TOL).value;
        let small_first = if self.finite_activity() || alpha < 1.0 {
            integrate(|x| x * d(x), 0.0, 1.0, ABS_TOL, REL_TOL).value
        } else {
            f64::INFINITY
        };
        let large_first = if kappa > 0.0 || alpha > 1.0 {
            integrate_to_inf(|x| x * d(x), 1.0, ABS_TOL, REL_TOL).value
        } else {
            f64::INFINITY
        };
        let mass = MassCheck {
            small_second,
            large_mass,
            small_first,
            large_first,
        };
        if !mass.total().is_finite() {
            return Err(Error::Model("∫(1 ∧ x²) Π(dx) is not finite".into()));
        }
        Ok(mass)
    }

    /// `∫ (e^{-sx} − 1 + sx·1(x<1)) Π(dx)` by quadrature split at the
    /// compensation cutoff. Valid for any real `s` where the integral
    /// converges.
    fn compensated_quad(&self, s: f64) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        let small = integrate(|x| exp_m1_plus(s * x) * self.density(x), 0.0, 1.0, ABS_TOL, REL_TOL).value;
        let large = integrate_to_inf(|x| (-s * x).exp_m1() * self.density(x), 1.0, ABS_TOL, REL_TOL).value;
        small + large
    }

    /// Jump part of `(ψ(b) − ψ(a)) / (b − a)` without cancellation; at
    /// `a = b` this is the jump part of `ψ'(a)`.
    fn divided_quad(&self, a: f64, b: f64) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        let h = b - a;
        // x·(1 − e^{-ax} g(hx)) on (0,1), g(u) = (1 − e^{-u})/u
        let small_kernel = |x: f64| {
            let hx = h * x;
            let k = if hx.abs() < 1e-3 {
                -(-a * x).exp_m1() + (-a * x).exp() * (hx / 2.0 - hx * hx / 6.0 + hx * hx * hx / 24.0)
            } else {
                (exp_m1_plus(b * x) - exp_m1_plus(a * x)) / hx
            };
            x * k * self.density(x)
        };
        let small = integrate(small_kernel, 0.0, 1.0, ABS_TOL, REL_TOL).value;
        let large = integrate_to_inf(
            |x| -x * (-a * x).exp() * one_minus_exp_over(h * x) * self.density(x),
            1.0,
            ABS_TOL,
            REL_TOL,
        )
        .value;
        small + large
    }

    /// Closed-form analytic continuation of the compensated jump integral.
    fn compensated_complex(&self, z: Complex64) -> Complex64 {
        match self.spec {
            JumpSpec::None => Complex64::new(0.0, 0.0),
            JumpSpec::CompoundPoisson { rate, density } => {
                (density.laplace(z) - 1.0) * rate + z * self.mass.small_first
            }
            JumpSpec::PowerTail {
                coefficient,
                exponent: a,
                tempering: k,
                ..
            } => {
                let g = coefficient * gamma_fn(-a);
                let kz = (z + k).powf(a);
                let ka = if k > 0.0 { k.powf(a) } else { 0.0 };
                if a < 1.0 {
                    (kz - ka) * g + z * self.mass.small_first
                } else {
                    let ka1 = if k > 0.0 { k.powf(a - 1.0) } else { 0.0 };
                    (kz - ka - z * (a * ka1)) * g - z * self.mass.large_first
                }
            }
        }
    }

    /// Largest `α` (most negative tilt) for which `ψ(α)` is finite is any
    /// value above this bound.
    fn tilt_lower_bound(&self) -> f64 {
        match self.spec {
            JumpSpec::None => f64::NEG_INFINITY,
            JumpSpec::CompoundPoisson { density, .. } => -density.rate_param(),
            JumpSpec::PowerTail { tempering, .. } => -tempering,
        }
    }

    /// `∫ x Π(dx)` over `[lo, hi)`.
    pub fn first_moment_between(&self, lo: f64, hi: f64) -> f64 {
        if self.is_none() || hi <= lo {
            return 0.0;
        }
        if hi.is_infinite() {
            return integrate_to_inf(|x| x * self.density(x), lo, ABS_TOL, REL_TOL).value;
        }
        integrate(|x| x * self.density(x), lo, hi, ABS_TOL, REL_TOL).value
    }

    /// `∫_{(0, ε)} x² Π(dx)`: variance rate of the truncated small jumps.
    pub fn small_jump_variance(&self, epsilon: f64) -> f64 {
        if self.is_none() || epsilon <= 0.0 {
            return 0.0;
        }
        integrate(|x| x * x * self.density(x), 0.0, epsilon, ABS_TOL, REL_TOL).value
    }

    /// `Π([ε, ∞))`.
    pub fn tail_mass(&self, epsilon: f64) -> f64 {
        match self.spec {
            JumpSpec::None => 0.0,
            JumpSpec::CompoundPoisson { rate, .. } if epsilon <= 0.0 => rate,
            _ => integrate_to_inf(|x| self.density(x), epsilon.max(0.0), ABS_TOL * 1e-2, REL_TOL).value,
        }
    }
}

/// Serialisable triplet, read from `{"sigma2": .., "mu": .., "jumps": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub sigma2: f64,
    pub mu: f64,
    #[serde(default)]
    pub jumps: JumpSpec,
}

/// A spectrally positive Lévy process with its derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    sigma2: f64,
    mu: f64,
    jumps: JumpMeasure,
    p: f64,
    gamma: f64,
}

impl LevyModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let ModelSpec { sigma2, mu, jumps } = spec;
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Model(format!("sigma2 must be finite and ≥ 0, got {sigma2}")));
        }
        if !mu.is_finite() {
            return Err(Error::Model(format!("mu must be finite, got {mu}")));
        }
        let jumps = JumpMeasure::new(jumps)?;
        if sigma2 == 0.0 && jumps.is_none() && mu == 0.0 {
            return Err(Error::Model("degenerate model: no diffusion, no jumps, no drift".into()));
        }
        let gamma = mu + jumps.mass.large_first;
        let mut model = LevyModel {
            sigma2,
            mu,
            jumps,
            p: 0.0,
            gamma,
        };
        model.p = model.compute_p()?;
        Ok(model)
    }

    /// Brownian motion with drift: `ψ(s) = σ²s²/2 − μs`.
    pub fn brownian(sigma2: f64, mu: f64) -> Result<Self> {
        Self::new(ModelSpec {
            sigma2,
            mu,
            jumps: JumpSpec::None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| Error::config("model", e.to_string()))?;
        Self::new(spec)
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            sigma2: self.sigma2,
            mu: self.mu,
            jumps: self.jumps.spec,
        }
    }

    /// Short content hash of the triplet, used to tag derived tables.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.spec()).expect("model spec serialises");
        sha256_hex(json.as_bytes())[..16].to_string()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    /// `p = Φ(0)`; `+∞` for subordinators.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `γ = E ξ_1`, possibly `+∞`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(σ², μ)` when the model is Brownian motion with drift.
    pub fn as_brownian(&self) -> Option<(f64, f64)> {
        (self.jumps.is_none() && self.sigma2 > 0.0).then_some((self.sigma2, self.mu))
    }

    pub fn has_unbounded_variation(&self) -> bool {
        self.sigma2 > 0.0 || !self.jumps.bounded_variation()
    }

    /// Linear coefficient `d` with `ψ(s)/s → d` (bounded variation only).
    pub fn bv_drift(&self) -> Option<f64> {
        (!self.has_unbounded_variation()).then(|| -self.mu + self.jumps.mass.small_first)
    }

    /// Increasing paths: `ψ < 0` on `(0, ∞)`.
    pub fn is_subordinator(&self) -> bool {
        matches!(self.bv_drift(), Some(d) if d <= 0.0)
    }

    /// `W(0)`: zero for unbounded variation, `1/d` otherwise.
    pub fn w_at_zero(&self) -> f64 {
        match self.bv_drift() {
            Some(d) if d > 0.0 => 1.0 / d,
            _ => 0.0,
        }
    }

    pub fn require_finite_gamma(&self) -> Result<f64> {
        if self.gamma.is_finite() && self.gamma > 0.0 {
            Ok(self.gamma)
        } else {
            Err(Error::Unsupported(format!("requires γ ∈ (0,∞), model has γ = {}", self.gamma)))
        }
    }

    pub fn require_positive_p(&self) -> Result<f64> {
        if self.p > 0.0 && self.p.is_finite() {
            Ok(self.p)
        } else {
            Err(Error::precondition("p > 0", format!("model has p = {}", self.p)))
        }
    }

    fn psi_ext(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        if s < self.jumps.tilt_lower_bound() || (s == self.jumps.tilt_lower_bound() && !self.jumps.is_none()) {
            return Err(Error::Model(format!("ψ({s}) diverges for this Lévy measure")));
        }
        Ok(0.5 * self.sigma2 * s * s - self.mu * s + self.jumps.compensated_quad(s))
    }

    /// Laplace exponent `ψ(s)` for `s ≥ 0`.
    pub fn psi(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("ψ needs s ≥ 0, got {s}")));
        }
        self.psi_ext(s)
    }

    /// `ψ` continued analytically to complex arguments (closed form).
    pub fn psi_complex(&self, z: Complex64) -> Complex64 {
        z * z * (0.5 * self.sigma2) - z * self.mu + self.jumps.compensated_complex(z)
    }

    /// `(ψ(b) − ψ(a)) / (b − a)` evaluated stably; `ψ'(a)` when `a = b`.
    pub fn psi_divided(&self, a: f64, b: f64) -> f64 {
        0.5 * self.sigma2 * (a + b) - self.mu + self.jumps.divided_quad(a, b)
    }

    pub fn psi_prime(&self, s: f64) -> f64 {
        self.psi_divided(s, s)
    }

    /// `Φ'(0) = 1/ψ'(p)`; `W_p(∞)` when `p > 0`.
    pub fn phi_prime_zero(&self) -> f64 {
        if self.p.is_infinite() {
            return 0.0;
        }
        let d = self.psi_prime(self.p);
        if d <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / d
        }
    }

    fn compute_p(&self) -> Result<f64> {
        if self.is_subordinator() {
            return Ok(f64::INFINITY);
        }
        if self.gamma <= 0.0 {
            return Ok(0.0);
        }
        let hi = self.expand_bracket(1.0, 0.0)?;
        upper_crossing(|s| self.psi_ext(s).unwrap_or(f64::NAN), 0.0, hi, 0.0, 1e-15, 0.0)
    }

    fn expand_bracket(&self, start: f64, q: f64) -> Result<f64> {
        let mut hi = start;
        for _ in 0..200 {
            if self.psi_ext(hi)? > q {
                return Ok(hi);
            }
            hi *= 2.0;
        }
        Err(Error::Numeric(format!("could not bracket ψ(s) = {q}: ψ({hi}) still ≤ {q}")))
    }

    /// Right inverse `Φ(q) = sup{s ≥ 0 : ψ(s) = q}`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) {
            return Err(Error::Domain(format!("Φ needs q ≥ 0, got {q}")));
        }
        if self.p.is_infinite() {
            return Err(Error::Unsupported("Φ is undefined for a subordinator".into()));
        }
        if q == 0.0 {
            return Ok(self.p);
        }
        let lo = self.p.max(0.0);
        let hi = self.expand_bracket((2.0 * lo).max(1.0), q)?;
        let root = upper_crossing(
            |s| self.psi_ext(s).unwrap_or(f64::NAN),
            lo,
            hi,
            q,
            1e-15,
            1e-13 * (1.0 + q),
        )
        .map_err(|e| Error::Numeric(format!("Φ({q}) on bracket [{lo}, {hi}]: {e}")))?;
        let resid = (self.psi_ext(root)? - q).abs();
        if resid > 1e-10 * (1.0 + q) {
            return Err(Error::Numeric(format!(
                "Φ({q}) = {root} leaves residual {resid:e} (bracket [{lo}, {hi}])"
            )));
        }
        Ok(root)
    }

    /// Esscher transform: the model with `ψ_α(s) = ψ(α + s) − ψ(α)`.
    pub fn esscher(&self, alpha: f64) -> Result<LevyModel> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("tilt must be finite, got {alpha}")));
        }
        let psi_alpha = self.psi_ext(alpha)?;
        let shift = self.jumps.first_moment_weighted_small(alpha);
        let mu = self.mu - self.sigma2 * alpha - shift;
        let jumps = match self.jumps.spec {
            JumpSpec::None => JumpSpec::None,
            JumpSpec::CompoundPoisson { rate, density } => JumpSpec::CompoundPoisson {
                rate: rate * density.laplace(Complex64::new(alpha, 0.0)).re,
                density: density.tilted(alpha),
            },
            JumpSpec::PowerTail {
                coefficient,
                exponent,
                tempering,
                epsilon,
            } => JumpSpec::PowerTail {
                coefficient,
                exponent,
                tempering: tempering + alpha,
                epsilon,
            },
        };
        let tilted = LevyModel::new(ModelSpec {
            sigma2: self.sigma2,
            mu,
            jumps,
        })?;
        for &s in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let lhs = tilted.psi(s)?;
            let rhs = self.psi_ext(alpha + s)? - psi_alpha;
            if (lhs - rhs).abs() > 1e-8 * (1.0 + rhs.abs()) {
                return Err(Error::Numeric(format!(
                    "Esscher check failed at s={s}: ψ_α={lhs} vs ψ(α+s)−ψ(α)={rhs}"
                )));
            }
        }
        Ok(tilted)
    }
}

impl JumpMeasure {
    /// `∫_0^1 x (1 − e^{−αx}) Π(dx)`: drift correction of the Esscher tilt.
    fn first_moment_weighted_small(&self, alpha: f64) -> f64 {
        if self.is_none() || alpha == 0.0 {
            return 0.0;
        }
        integrate(|x| x * (-(-alpha * x).exp_m1()) * self.density(x), 0.0, 1.0, ABS_TOL, REL_TOL).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 1.0).unwrap()
    }

    /// Compound Poisson rate 1, Exp(1) jumps, μ chosen so γ = 1/2.
    pub(crate) fn cp_model() -> LevyModel {
        let mu = 0.5 - 2.0 * (-1.0f64).exp();
        LevyModel::new(ModelSpec {
            sigma2: 0.0,
            mu,
            jumps: JumpSpec::CompoundPoisson {
                rate: 1.0,
                density: JumpDensity::Exponential { beta: 1.0 },
            },
        })
        .unwrap()
    }

    fn stable_like() -> LevyModel {
        LevyModel::new(ModelSpec {
            sigma2: 0.5,
            mu: 0.3,
            jumps: JumpSpec::PowerTail {
                coefficient: 0.4,
                exponent: 1.5,
                tempering: 0.5,
                epsilon: 0.01,
            },
        })
        .unwrap()
    }

    #[test]
    fn brownian_psi_values() {
        let m = bm();
        assert!((m.psi(2.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(m.psi(0.0).unwrap(), 0.0);
        assert!(m.psi(1.0).unwrap().abs() < 1e-14);
        assert!(matches!(m.psi(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn brownian_phi_values() {
        let m = bm();
        assert!((m.phi(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.phi(2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.p() - 1.0).abs() < 1e-12);
        assert!((m.gamma() - 1.0).abs() < 1e-15);
        assert!((m.phi_prime_zero() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compound_poisson_constants() {
        let m = cp_model();
        assert!((m.gamma() - 0.5).abs() < 1e-12);
        assert!((m.p() - 1.0).abs() < 1e-10, "p = {}", m.p());
        // ψ(s) = s(s−1)/(2(1+s))
        for &s in &[0.3, 1.0, 2.5, 7.0] {
            let exact = s * (s - 1.0) / (2.0 * (1.0 + s));
            assert!((m.psi(s).unwrap() - exact).abs() < 1e-11, "s={s}");
        }
        assert!((m.w_at_zero() - 2.0).abs() < 1e-10);
        assert!((m.phi_prime_zero() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_and_quadrature_agree() {
        for m in [bm(), cp_model(), stable_like()] {
            for &s in &[0.1, 0.7, 1.3, 4.0, 12.0] {
                let q = m.psi(s).unwrap();
                let c = m.psi_complex(Complex64::new(s, 0.0));
                assert!((q - c.re).abs() < 1e-9 * (1.0 + q.abs()), "s={s}: {q} vs {c}");
                assert!(c.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_matches_minus_psi_prime() {
        for m in [bm(), cp_model(), stable_like()] {
            let h = 1e-5;
            let fd = (m.psi(h).unwrap() - 0.0) / h;
            let fd2 = (m.psi(2.0 * h).unwrap() - m.psi(h).unwrap()) / h;
            // second-order one-sided difference at 0
            let deriv = 0.5 * (3.0 * fd - fd2);
            assert!((deriv + m.gamma()).abs() < 1e-6 * (1.0 + m.gamma()), "{deriv} vs {}", m.gamma());
            assert!((m.psi_prime(0.0) + m.gamma()).abs() < 1e-10);
        }
    }

    #[test]
    fn phi_inverts_psi() {
        for m in [bm(), cp_model(), stable_like()] {
            let mut last = 0.0;
            for &q in &[0.0, 0.1, 1.0, 5.0, 50.0] {
                let s = m.phi(q).unwrap();
                assert!((m.psi(s).unwrap() - q).abs() <= 1e-10 * (1.0 + q));
                assert!(s >= last);
                last = s;
            }
        }
    }

    #[test]
    fn negative_drift_has_zero_p() {
        let m = LevyModel::brownian(1.0, -0.5).unwrap();
        assert_eq!(m.p(), 0.0);
        assert!((m.phi_prime_zero() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn subordinator_has_infinite_p() {
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        assert!(m.is_subordinator());
        assert!(m.p().is_infinite());
        assert!(matches!(m.phi(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(LevyModel::brownian(0.0, 0.0).is_err());
        assert!(LevyModel::brownian(-1.0, 0.0).is_err());
        let bad = ModelSpec {
            sigma2: 1.0,
            mu: 0.0,
            jumps: JumpSpec::PowerTail {
                coefficient: 1.0,
                exponent: 2.5,
                tempering: 0.0,
                epsilon: 0.1,
            },
        };
        assert!(matches!(LevyModel::new(bad), Err(Error::Model(_))));
    }

    #[test]
    fn heavy_tail_records_infinite_gamma() {
        let m = LevyModel::new(ModelSpec {
            sigma2: 1.0,
            mu: 0.0,
            jumps: JumpSpec::PowerTail {
                coefficient: 0.2,
                exponent: 0.7,
                tempering: 0.0,
                epsilon: 0.01,
            },
        })
        .unwrap();
        assert!(m.gamma().is_infinite());
        assert!(m.p() > 0.0 && m.p().is_finite());
        assert!(m.require_finite_gamma().is_err());
    }

    #[test]
    fn esscher_examples() {
        let m = bm();
        let t0 = m.esscher(0.0).unwrap();
        for &s in &[0.5, 1.0, 3.0] {
            assert!((t0.psi(s).unwrap() - m.psi(s).unwrap()).abs() < 1e-14);
        }
        let t1 = m.esscher(1.0).unwrap();
        for &s in &[0.5, 1.0, 3.0] {
            assert!((t1.psi(s).unwrap() - (s * s + s)).abs() < 1e-12);
        }
        for m in [bm(), cp_model(), stable_like()] {
            let t = m.esscher(0.4).unwrap();
            assert!(t.psi(t.phi(0.0).unwrap()).unwrap().abs() < 1e-10);
            // Φ_α(s) = Φ(ψ(α) + s) − α
            let pa = m.psi(0.4).unwrap();
            for &s in &[0.5, 1.0] {
                let lhs = t.phi(s).unwrap();
                let rhs = m.phi(pa + s).unwrap() - 0.4;
                assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn esscher_divergent_tilt_is_model_error() {
        assert!(matches!(cp_model().esscher(-1.5), Err(Error::Model(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"sigma2": 0.0, "mu": -0.2, "jumps": {"type": "compound_poisson", "rate": 1.0, "density": {"type": "exponential", "beta": 1.0}}}"#;
        let m = LevyModel::from_json(text).unwrap();
        assert_eq!(m.spec().mu, -0.2);
        assert!(LevyModel::from_json(r#"{"sigma2": 1, "mu": 0, "drift": 3}"#).is_err());
        let bm = LevyModel::from_json(r#"{"sigma2": 2, "mu": 1}"#).unwrap();
        assert_eq!(bm.as_brownian(), Some((2.0, 1.0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn psi_is_convex(s1 in 0.0f64..5.0, gap in 0.01f64..5.0, t in 0.01f64..0.99) {
            for m in [bm(), cp_model(), stable_like()] {
                let s2 = s1 + gap;
                let mid = t * s1 + (1.0 - t) * s2;
                let lhs = m.psi(mid).unwrap();
                let rhs = t * m.psi(s1).unwrap() + (1.0 - t) * m.psi(s2).unwrap();
                prop_assert!(lhs <= rhs + 1e-10);
            }
        }

        #[test]
        fn esscher_round_trip(alpha in -0.4f64..2.0) {
            for m in [bm(), cp_model(), stable_like()] {
                let back = m.esscher(alpha).unwrap().esscher(-alpha).unwrap();
                for &s in &[0.3, 1.0, 2.0] {
                    prop_assert!((back.psi(s).unwrap() - m.psi(s).unwrap()).abs() < 1e-10);
                }
            }
        }
    }
}
