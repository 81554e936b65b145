//! Stationary overshoot law of first passage above high levels.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;

/// Transform `ρ̂(s) = pψ(s) / (γ s (s − p))` of the limiting overshoot.
///
/// Both zeros of the denominator are removable; `ψ(s)/s` and `ψ(s)/(s−p)`
/// are evaluated as divided differences of `ψ`, choosing whichever pole is
/// farther from `s`.
#[derive(Debug, Clone)]
pub struct OvershootLaw {
    model: LevyModel,
    p: f64,
    gamma: f64,
}

impl OvershootLaw {
    pub fn new(model: &LevyModel) -> Result<Self> {
        let p = model.p();
        let gamma = model.gamma();
        if !(p > 0.0 && p.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Unsupported(format!(
                "overshoot law needs p, γ ∈ (0,∞); model has p = {p}, γ = {gamma}"
            )));
        }
        Ok(OvershootLaw {
            model: model.clone(),
            p,
            gamma,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transform(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("overshoot transform needs s ≥ 0, got {s}")));
        }
        let scale = self.p / self.gamma;
        Ok(if s < 0.5 * self.p {
            scale * self.model.psi_divided(0.0, s) / (s - self.p)
        } else {
            scale * self.model.psi_divided(self.p, s) / s
        })
    }

    /// `1/(γΦ'(0)) = ψ'(p)/γ`, the value at `s = p`.
    pub fn value_at_p(&self) -> f64 {
        1.0 / (self.gamma * self.model.phi_prime_zero())
    }

    /// Checks non-negativity and monotone decrease of `ρ̂` on `grid`.
    pub fn check_monotone(&self, grid: &[f64]) -> Result<()> {
        let mut last = f64::INFINITY;
        for &s in grid {
            let v = self.transform(s)?;
            if v < -1e-12 || v > last + 1e-10 {
                return Err(Error::Numeric(format!("overshoot transform not decreasing at s = {s}")));
            }
            last = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpDensity, JumpSpec, ModelSpec};

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

    #[test]
    fn brownian_has_no_overshoot() {
        let law = OvershootLaw::new(&LevyModel::brownian(2.0, 1.0).unwrap()).unwrap();
        for &s in &[0.0, 0.3, 0.5, 1.0, 1.0 + 1e-9, 4.0] {
            assert!((law.transform(s).unwrap() - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn exponential_jumps_give_exponential_overshoot() {
        // ρ̂(s) = 1/(1+s) for this model
        let law = OvershootLaw::new(&cp()).unwrap();
        for &s in &[0.0, 1e-7, 0.2, 0.5, 1.0, 1.0 - 1e-9, 3.0] {
            assert!((law.transform(s).unwrap() - 1.0 / (1.0 + s)).abs() < 1e-10, "s={s}");
        }
        assert!((law.value_at_p() - 0.5).abs() < 1e-10);
        law.check_monotone(&[0.0, 0.1, 0.5, 0.99, 1.0, 1.01, 2.0, 10.0]).unwrap();
    }

    #[test]
    fn continuity_across_p() {
        let law = OvershootLaw::new(&cp()).unwrap();
        let below = law.transform(0.5 - 1e-12).unwrap();
        let above = law.transform(0.5 + 1e-12).unwrap();
        assert!((below - above).abs() < 1e-8);
        let left = law.transform(1.0 - 1e-10).unwrap();
        let right = law.transform(1.0 + 1e-10).unwrap();
        assert!((left - right).abs() < 1e-8);
    }

    #[test]
    fn needs_positive_p() {
        let m = LevyModel::brownian(1.0, -1.0).unwrap();
        assert!(matches!(OvershootLaw::new(&m), Err(Error::Unsupported(_))));
    }
}
