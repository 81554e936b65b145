//! Pointwise evaluation of q-scale functions.
//!
//! Everything is computed in tilted form. With `Φ = Φ(q)` and
//! `c = 1/ψ'(Φ)`,
//!
//! ```text
//! W_Φ(z) = e^{−Φz} W^(q)(z),   L[W_Φ](s) = 1/(ψ(s + Φ) − q)
//! V(z)   = c e^{Φz} − W^(q)(z), L[V](s)   = c/(s − Φ) − 1/(ψ(s) − q)
//! ```
//!
//! `W_Φ` increases to `c` and `V` is bounded (it tends to `1/γ` when
//! `q = 0` and `p > 0`), so both invert without overflow, and differences
//! such as `e^{−px}W(x+y) − W(y)` can be formed from `V` without
//! cancellation.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::numeric::one_minus_exp_over;
use crate::numeric::talbot::{invert, invert_with_estimate, DEFAULT_NODES};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    /// Closed form when the model has one, contour inversion otherwise.
    #[default]
    Auto,
    ClosedForm,
    Talbot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BrownianRoots {
    half_sigma2: f64,
    /// `Φ(q) − r₂ ≥ 0`, the gap between the two roots of `ψ(s) = q`.
    gap: f64,
}

/// Evaluator for `W^(q)` and its tilted forms.
#[derive(Debug, Clone)]
pub struct ScaleKernel {
    model: LevyModel,
    q: f64,
    phi_q: f64,
    /// `1/ψ'(Φ(q))`, the limit of `W_Φ`.
    slope: f64,
    w0: f64,
    closed: Option<BrownianRoots>,
    nodes: usize,
}

impl ScaleKernel {
    pub fn new(model: &LevyModel, q: f64, method: InversionMethod, nodes: usize) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("scale functions need finite q ≥ 0, got {q}")));
        }
        if model.is_subordinator() {
            return Err(Error::Unsupported(
                "scale functions are undefined for models with increasing paths".into(),
            ));
        }
        let phi_q = model.phi(q)?;
        let dpsi = model.psi_prime(phi_q);
        let slope = if dpsi > 0.0 { 1.0 / dpsi } else { f64::INFINITY };
        let closed = match (method, model.as_brownian()) {
            (InversionMethod::Talbot, _) => None,
            (_, Some((sigma2, mu))) => Some(BrownianRoots {
                half_sigma2: 0.5 * sigma2,
                gap: (2.0 * phi_q - 2.0 * mu / sigma2).max(0.0),
            }),
            (InversionMethod::ClosedForm, None) => {
                return Err(Error::Unsupported("no closed-form scale function for this model".into()))
            }
            (InversionMethod::Auto, None) => None,
        };
        Ok(ScaleKernel {
            model: model.clone(),
            q,
            phi_q,
            slope,
            w0: model.w_at_zero(),
            closed,
            nodes: if nodes == 0 { DEFAULT_NODES } else { nodes },
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Φ(q)`, the tilt rate.
    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    /// `lim W_Φ(z) = 1/ψ'(Φ(q))`; equals `Φ'(0)` when `q = 0`.
    pub fn tilted_limit(&self) -> f64 {
        self.slope
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed.is_some()
    }

    /// `W(0)`.
    pub fn at_zero(&self) -> f64 {
        self.w0
    }

    /// `e^{−Φ(q)z} W^(q)(z)` and an inversion error estimate.
    pub fn tilted(&self, z: f64) -> (f64, f64) {
        if z < 0.0 {
            return (0.0, 0.0);
        }
        if z == 0.0 {
            return (self.w0, 0.0);
        }
        if let Some(r) = self.closed {
            return (z * one_minus_exp_over(r.gap * z) / r.half_sigma2, 0.0);
        }
        let (phi, q) = (self.phi_q, self.q);
        let f = |s: Complex64| 1.0 / (self.model.psi_complex(s + phi) - q);
        invert_with_estimate(&f, z, self.nodes, None)
    }

    pub fn tilted_value(&self, z: f64) -> f64 {
        if z <= 0.0 || self.closed.is_some() {
            return self.tilted(z).0;
        }
        let (phi, q) = (self.phi_q, self.q);
        let f = |s: Complex64| 1.0 / (self.model.psi_complex(s + phi) - q);
        invert(&f, z, self.nodes, None)
    }

    /// `W^(q)(z)`.
    pub fn w(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return self.tilted_value(z);
        }
        (self.phi_q * z).exp() * self.tilted_value(z)
    }

    /// `V(z) = e^{Φz}/ψ'(Φ) − W^(q)(z)`, bounded; requires `Φ(q) > 0`.
    pub fn residual(&self, z: f64) -> Result<f64> {
        if !(self.phi_q > 0.0 && self.slope.is_finite()) {
            return Err(Error::precondition(
                "Φ(q) > 0",
                format!("residual scale function needs a positive tilt, Φ(q) = {}", self.phi_q),
            ));
        }
        if z < 0.0 {
            return Err(Error::Domain(format!("residual defined for z ≥ 0, got {z}")));
        }
        if z == 0.0 {
            return Ok(self.slope - self.w0);
        }
        if let Some(r) = self.closed {
            // e^{r₂z} / (σ²/2 · (Φ − r₂))
            return Ok(((self.phi_q - r.gap) * z).exp() / (r.half_sigma2 * r.gap));
        }
        let (phi, q, c) = (self.phi_q, self.q, self.slope);
        let f = |s: Complex64| c / (s - phi) - 1.0 / (self.model.psi_complex(s) - q);
        Ok(invert(&f, z, self.nodes, Some(phi)))
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
    fn brownian_closed_form_and_talbot_agree() {
        let m = LevyModel::brownian(2.0, 1.0).unwrap();
        let cf = ScaleKernel::new(&m, 0.0, InversionMethod::Auto, 0).unwrap();
        let tb = ScaleKernel::new(&m, 0.0, InversionMethod::Talbot, 0).unwrap();
        assert!(cf.is_closed_form() && !tb.is_closed_form());
        for &x in &[0.01f64, 0.5, 1.0, 3.0, 10.0] {
            let exact = x.exp_m1();
            assert!((cf.w(x) - exact).abs() <= 1e-13 * exact);
            assert!((tb.w(x) - exact).abs() <= 1e-7 * exact, "x={x}: {}", tb.w(x));
            assert!((cf.residual(x).unwrap() - 1.0).abs() < 1e-14);
            assert!((tb.residual(x).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn brownian_q_scale() {
        // σ²=2, μ=1, q=2: roots 2 and −1, W^(2)(x) = (e^{2x} − e^{−x})/3
        let m = LevyModel::brownian(2.0, 1.0).unwrap();
        let cf = ScaleKernel::new(&m, 2.0, InversionMethod::Auto, 0).unwrap();
        let tb = ScaleKernel::new(&m, 2.0, InversionMethod::Talbot, 0).unwrap();
        for &x in &[0.1f64, 1.0, 4.0] {
            let exact = ((2.0 * x).exp() - (-x).exp()) / 3.0;
            assert!((cf.w(x) - exact).abs() <= 1e-12 * exact);
            assert!((tb.w(x) - exact).abs() <= 1e-7 * exact);
            let v = (-x).exp() / 3.0;
            assert!((cf.residual(x).unwrap() - v).abs() < 1e-14);
            assert!((tb.residual(x).unwrap() - v).abs() < 1e-8);
        }
    }

    #[test]
    fn compound_poisson_scale() {
        // W(x) = 4e^x − 2, V ≡ 2
        let k = ScaleKernel::new(&cp(), 0.0, InversionMethod::Auto, 0).unwrap();
        assert!((k.at_zero() - 2.0).abs() < 1e-10);
        assert!((k.tilted_limit() - 4.0).abs() < 1e-9);
        for &x in &[0.05f64, 1.0, 5.0, 20.0] {
            let exact = 4.0 - 2.0 * (-x).exp();
            let (v, err) = k.tilted(x);
            assert!((v - exact).abs() < 1e-8, "x={x}: {v} vs {exact}");
            assert!(err < 1e-5);
            assert!((k.residual(x).unwrap() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn negative_argument_is_zero() {
        let m = LevyModel::brownian(2.0, 1.0).unwrap();
        let k = ScaleKernel::new(&m, 0.0, InversionMethod::Auto, 0).unwrap();
        assert_eq!(k.w(-0.1), 0.0);
        assert_eq!(k.w(0.0), 0.0);
    }
}
