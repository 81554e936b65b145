//! One Euler step of the Lévy process: drift, Gaussian part (diffusion plus
//! compensated small jumps) and large jumps from a thinned Poisson stream.

use crate::error::{Error, Result};
use crate::levy_model::{JumpDensity, JumpSpec, LevyModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};

#[derive(Debug, Clone)]
enum LargeJumps {
    None,
    Exact { rate: f64, density: JumpDensity },
    /// Pareto proposals above `epsilon`, accepted with `e^{−κ(x−ε)}`.
    Thinned { rate: f64, epsilon: f64, exponent: f64, tempering: f64 },
}

/// Increment generator for a fixed model and small-jump truncation.
#[derive(Debug, Clone)]
pub struct Stepper {
    drift: f64,
    volatility: f64,
    jumps: LargeJumps,
    epsilon: f64,
}

/// Largest truncation level, halving from the model's own, at which the
/// compensation variance stays within 10% of `σ²`. Pure-jump models keep
/// the model's level.
pub fn default_epsilon(model: &LevyModel) -> Option<f64> {
    let JumpSpec::PowerTail { epsilon, .. } = *model.jumps().spec() else {
        return None;
    };
    let s2 = model.sigma2();
    if s2 == 0.0 {
        return Some(epsilon);
    }
    let mut eps = epsilon;
    for _ in 0..200 {
        if model.jumps().small_jump_variance(eps) <= 0.1 * s2 {
            break;
        }
        eps *= 0.5;
    }
    Some(eps)
}

impl Stepper {
    pub fn new(model: &LevyModel, epsilon: Option<f64>) -> Result<Self> {
        let measure = model.jumps();
        let (drift, small_var, jumps, eps) = match *measure.spec() {
            JumpSpec::None => (model.mu(), 0.0, LargeJumps::None, 0.0),
            JumpSpec::CompoundPoisson { rate, density } => (
                model.mu() - measure.mass().small_first,
                0.0,
                LargeJumps::Exact { rate, density },
                0.0,
            ),
            JumpSpec::PowerTail {
                coefficient,
                exponent,
                tempering,
                ..
            } => {
                let eps = match epsilon {
                    Some(e) => e,
                    None => default_epsilon(model).unwrap_or(1.0),
                };
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::Domain(format!("small-jump truncation must be positive, got {eps}")));
                }
                // jumps in [ε, 1) are simulated but compensated in ψ
                let shift = if eps < 1.0 {
                    -measure.first_moment_between(eps, 1.0)
                } else {
                    measure.first_moment_between(1.0, eps)
                };
                let jumps = LargeJumps::Thinned {
                    rate: coefficient * eps.powf(-exponent) / exponent,
                    epsilon: eps,
                    exponent,
                    tempering,
                };
                (model.mu() + shift, measure.small_jump_variance(eps), jumps, eps)
            }
        };
        Ok(Stepper {
            drift,
            volatility: (model.sigma2() + small_var).sqrt(),
            jumps,
            epsilon: eps,
        })
    }

    /// Drift of the continuous part.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Standard deviation per unit time of the Gaussian part.
    pub fn volatility(&self) -> f64 {
        self.volatility
    }

    /// Truncation level in use (0 when every jump is simulated exactly).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Continuous increment over a step of length `h`.
    pub fn continuous(&self, rng: &mut ChaCha8Rng, h: f64) -> f64 {
        let z: f64 = if self.volatility > 0.0 { StandardNormal.sample(rng) } else { 0.0 };
        self.drift * h + self.volatility * h.sqrt() * z
    }

    /// Sum of the large jumps over a step of length `h`.
    pub fn jumps(&self, rng: &mut ChaCha8Rng, h: f64) -> f64 {
        let rate = match self.jumps {
            LargeJumps::None => return 0.0,
            LargeJumps::Exact { rate, .. } | LargeJumps::Thinned { rate, .. } => rate,
        };
        let mean = rate * h;
        let n = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
        (0..n).map(|_| self.one_jump(rng)).sum()
    }

    fn one_jump(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.jumps {
            LargeJumps::None => 0.0,
            LargeJumps::Exact { density, .. } => match density {
                JumpDensity::Exponential { beta } => Exp::new(beta).expect("validated rate").sample(rng),
                JumpDensity::Gamma { shape, beta } => Gamma::new(shape, 1.0 / beta).expect("validated shape").sample(rng),
            },
            LargeJumps::Thinned {
                epsilon,
                exponent,
                tempering,
                ..
            } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let x = epsilon * u.powf(-1.0 / exponent);
                if tempering == 0.0 || rng.random::<f64>() < (-tempering * (x - epsilon)).exp() {
                    x
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability that the Brownian bridge between `a` and `b` (both on
    /// the same side of `level`) touched `level` within a step `h`.
    pub fn bridge_crossing(&self, a: f64, b: f64, level: f64, h: f64) -> f64 {
        let s2 = self.volatility * self.volatility;
        if s2 == 0.0 {
            return 0.0;
        }
        let prod = (a - level) * (b - level);
        if prod <= 0.0 {
            return 1.0;
        }
        (-2.0 * prod / (s2 * h)).exp()
    }

    /// Largest plausible continuous move over one step: the drift plus six
    /// standard deviations.
    pub fn envelope(&self, h: f64) -> f64 {
        self.drift.abs() * h + 6.0 * self.volatility * h.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::ModelSpec;
    use rand::SeedableRng;

    fn mean_of_exp_neg(model: &LevyModel, t: f64, n: usize, eps: Option<f64>) -> (f64, f64) {
        let st = Stepper::new(model, eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 0.01;
        let steps = (t / h).round() as usize;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let mut x = 0.0;
                for _ in 0..steps {
                    x += st.continuous(&mut rng, h) + st.jumps(&mut rng, h);
                }
                (-x).exp()
            })
            .collect();
        let m = vals.iter().sum::<f64>() / n as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (m, (v / n as f64).sqrt())
    }

    #[test]
    fn laplace_of_increment_matches_psi() {
        // E e^{−ξ_t} = e^{tψ(1)}
        let cp = LevyModel::new(ModelSpec {
            sigma2: 0.5,
            mu: 0.5 - 2.0 * (-1.0f64).exp(),
            jumps: JumpSpec::CompoundPoisson {
                rate: 1.0,
                density: JumpDensity::Exponential { beta: 1.0 },
            },
        })
        .unwrap();
        let tempered = LevyModel::new(ModelSpec {
            sigma2: 0.5,
            mu: 0.3,
            jumps: JumpSpec::PowerTail {
                coefficient: 0.3,
                exponent: 1.5,
                tempering: 1.0,
                epsilon: 0.05,
            },
        })
        .unwrap();
        for m in [cp, tempered] {
            let exact = m.psi(1.0).unwrap().exp();
            let (got, se) = mean_of_exp_neg(&m, 1.0, 20000, None);
            assert!((got - exact).abs() < 4.0 * se + 5e-3, "{got} vs {exact} (se {se})");
        }
    }

    #[test]
    fn small_jump_truncation_respects_variance_budget() {
        let m = LevyModel::new(ModelSpec {
            sigma2: 1.0,
            mu: 0.0,
            jumps: JumpSpec::PowerTail {
                coefficient: 1.0,
                exponent: 1.5,
                tempering: 0.0,
                epsilon: 1.0,
            },
        })
        .unwrap();
        let eps = default_epsilon(&m).unwrap();
        assert!(m.jumps().small_jump_variance(eps) <= 0.1);
        assert!(m.jumps().small_jump_variance(2.0 * eps) > 0.1);
    }

    #[test]
    fn bridge_probability_limits() {
        let st = Stepper::new(&LevyModel::brownian(2.0, 1.0).unwrap(), None).unwrap();
        assert_eq!(st.bridge_crossing(1.0, -1.0, 0.0, 0.1), 1.0);
        assert!(st.bridge_crossing(5.0, 5.0, 0.0, 0.01) < 1e-100);
        let p = st.bridge_crossing(0.1, 0.1, 0.0, 0.01);
        assert!((p - (-2.0 * 0.01 / 0.02f64).exp()).abs() < 1e-15);
    }
}
