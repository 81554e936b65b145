//! Moments `m_n(x) = E_x[(T∞⁺)^n; T∞⁺ < T₀⁻]` of the explosion time.
//!
//! The recursion `m_n(x) = n ∫_0^∞ u(x,y) ω(y) m_{n−1}(y) dy` is discretised
//! in the variable `s = φ(y)/φ(y₀)`, for which `ω(y) dy = γφ(y₀) ds`. The
//! half-line becomes `[0, 1]` with `s = 0` at `y = ∞`, where the resolvent
//! tends to `(1 − e^{−px})/γ`. Extra nodes uniform in `y` resolve the
//! range where `u(x, ·)` changes on the scale `1/p`. Every evaluation point
//! is a node, so the kink of `u(x, ·)` at `y = x` never falls inside a panel.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::numeric::interp::UniformCubic;
use crate::numeric::quad::{integrate, integrate_to_inf};
use crate::omega_scale::{check_h0_h1_h2, RateFunction, Verdict, Weight};
use crate::scale_functions::{InversionMethod, ScaleKernel};
use rayon::prelude::*;
use serde::Serialize;

/// Discretisation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    /// Uniform panels in the mapped variable for the coarse pass; the fine
    /// pass doubles them.
    pub panels: usize,
    pub method: InversionMethod,
    /// Step of the interpolation tables used for Talbot kernels.
    pub table_step: f64,
    /// Range of those tables; larger arguments are inverted directly.
    pub table_upper: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            panels: 800,
            method: InversionMethod::Auto,
            table_step: 1e-3,
            table_upper: 64.0,
        }
    }
}

/// `m_n` on a set of starting points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub order: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Coarse/fine discrepancy plus the contribution of `[0, y₀]`.
    pub quadrature_bound: Vec<f64>,
    /// `n!·(∫_0^∞ ω W_p)^n`.
    pub factorial_bound: f64,
}

impl MomentTable {
    /// Whether every value respects the factorial bound (up to its
    /// quadrature bound).
    pub fn within_factorial_bound(&self) -> bool {
        self.values
            .iter()
            .zip(&self.quadrature_bound)
            .all(|(v, e)| *v >= -e && v - e <= self.factorial_bound * (1.0 + 1e-9))
    }
}

/// `u(x, y)` for `ξ` killed below 0, evaluated through `W_p` and the bounded
/// residual `V`.
#[derive(Debug, Clone)]
pub(crate) struct Resolvent {
    kernel: ScaleKernel,
    p: f64,
    gamma: f64,
    tables: Option<(UniformCubic, UniformCubic)>,
}

impl Resolvent {
    pub(crate) fn new(model: &LevyModel, opts: &MomentOptions) -> Result<Self> {
        let p = model.require_positive_p()?;
        let gamma = model.require_finite_gamma()?;
        let kernel = ScaleKernel::new(model, 0.0, opts.method, 0)?;
        let tables = if kernel.is_closed_form() {
            None
        } else {
            let n = (opts.table_upper / opts.table_step).ceil() as usize;
            let h = opts.table_upper / n as f64;
            let wp: Vec<f64> = (0..=n).into_par_iter().map(|k| kernel.tilted_value(k as f64 * h)).collect();
            let v: Vec<f64> = (0..=n)
                .into_par_iter()
                .map(|k| kernel.residual(k as f64 * h))
                .collect::<Result<_>>()?;
            Some((UniformCubic::new(h, wp), UniformCubic::new(h, v)))
        };
        Ok(Resolvent { kernel, p, gamma, tables })
    }

    pub(crate) fn wp(&self, z: f64) -> f64 {
        self.tables
            .as_ref()
            .and_then(|t| t.0.eval(z))
            .unwrap_or_else(|| self.kernel.tilted_value(z))
    }

    fn v(&self, z: f64) -> f64 {
        match self.tables.as_ref().and_then(|t| t.1.eval(z)) {
            Some(v) => v,
            None => self.kernel.residual(z).expect("p > 0 checked at construction"),
        }
    }

    /// `u(x, x+)`, which differs from `u(x, x) = W_p(x)` when `W(0) > 0`.
    fn density_above(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.v(0.0) - (-self.p * x).exp() * self.v(x)).max(0.0)
    }

    /// `u(x, y)`; `y = ∞` gives the renewal limit.
    pub(crate) fn density(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if y.is_infinite() {
            return -(-self.p * x).exp_m1() / self.gamma;
        }
        let u = if y <= x {
            (-self.p * (x - y)).exp() * self.wp(y)
        } else {
            self.v(y - x) - (-self.p * x).exp() * self.v(y)
        };
        u.max(0.0)
    }
}

/// `∫_0^∞ ω(y) W_p(y) dy`, the constant of the factorial bound and the
/// inverse radius of the exponential-moment series.
pub fn omega_wp_integral(model: &LevyModel, rate: &RateFunction) -> Result<f64> {
    let res = Resolvent::new(model, &MomentOptions::default())?;
    omega_wp_with(&res, rate)
}

fn omega_wp_with(res: &Resolvent, rate: &RateFunction) -> Result<f64> {
    let f = |y: f64| rate.omega(y) * res.wp(y);
    let head = integrate(f, 0.0, 1.0, 1e-12, 1e-9);
    let tail = integrate_to_inf(f, 1.0, 1e-12, 1e-9);
    let v = head.value + tail.value;
    if !v.is_finite() {
        return Err(Error::precondition("H1", "∫ ω W_p diverges"));
    }
    Ok(v)
}

fn check_preconditions(model: &LevyModel, rate: &RateFunction) -> Result<()> {
    model.require_positive_p()?;
    let report = check_h0_h1_h2(model, rate)?;
    if report.h1 == Verdict::No {
        return Err(Error::precondition("H1", "∫_{0+}^∞ W_p(z)/R(z) dz diverges"));
    }
    Ok(())
}

/// One discretisation of the recursion.
struct Pass {
    values: Vec<Vec<f64>>,
}

/// Matrices up to this many entries are stored; larger passes recompute
/// the resolvent row by row for every order.
const STORED_ENTRIES: usize = 1 << 22;

/// Node kinds in order of precedence when two nodes coincide.
const USER: u8 = 0;
const SPATIAL: u8 = 1;
const MAPPED: u8 = 2;

fn solve_pass(res: &Resolvent, rate: &RateFunction, y0: f64, points: &[f64], panels: usize, n_max: usize) -> Result<Pass> {
    let t0 = rate.tail_integral(y0);
    // (s, y, kind): uniform in s for the far tail, uniform in y on the
    // range where u(x, ·) varies on the scale 1/p
    let mut nodes: Vec<(f64, f64, u8)> = (0..=panels).map(|k| (k as f64 / panels as f64, f64::NAN, MAPPED)).collect();
    let scale = (1.0 / res.p).clamp(0.1, 10.0);
    let dy = 40.0 * scale / panels as f64;
    let reach = 40.0 * scale;
    let top = points.iter().copied().fold(y0, f64::max) + reach;
    let count = ((top - y0) / dy).ceil() as usize;
    for k in 1..count {
        let y = y0 + k as f64 * dy;
        nodes.push((rate.tail_integral(y) / t0, y, SPATIAL));
    }
    for &x in points {
        nodes.push((rate.tail_integral(x) / t0, x, USER));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut merged: Vec<(f64, f64, u8)> = Vec::with_capacity(nodes.len());
    for n in nodes {
        if let Some(last) = merged.last() {
            if (n.0 - last.0).abs() <= 1e-13 * n.0.max(last.0) && !(n.2 == USER && last.2 == USER) {
                // sorted by kind within equal s, so `last` wins unless the
                // new node is a user point
                if n.2 == USER {
                    *merged.last_mut().unwrap() = n;
                }
                continue;
            }
        }
        merged.push(n);
    }
    let ys: Vec<f64> = merged
        .iter()
        .map(|&(s, y, _)| {
            if !y.is_nan() {
                Ok(y)
            } else if s == 0.0 {
                Ok(f64::INFINITY)
            } else if s == 1.0 {
                Ok(y0)
            } else {
                rate.phi_inverse(s * t0, 1.0)
            }
        })
        .collect::<Result<_>>()?;
    let ss: Vec<f64> = merged.iter().map(|n| n.0).collect();
    let m = ss.len();
    // half-weights from the panel above (larger y) and below each node
    let above: Vec<f64> = (0..m).map(|j| if j > 0 { 0.5 * t0 * (ss[j] - ss[j - 1]) } else { 0.0 }).collect();
    let below: Vec<f64> = (0..m).map(|j| if j + 1 < m { 0.5 * t0 * (ss[j + 1] - ss[j]) } else { 0.0 }).collect();
    // Panels longer than `dy` near x get product weights: u(x, ·) is
    // integrated exactly against the linear hat functions in s.
    let corrections: Vec<Vec<(usize, f64)>> = ys
        .par_iter()
        .map(|&x| {
            let mut out = Vec::new();
            if x.is_infinite() {
                return out;
            }
            for j in 0..m - 1 {
                let (hi, lo) = (ys[j], ys[j + 1]);
                let near = lo - x < reach && x - hi < reach;
                if hi - lo <= 1.5 * dy || !near {
                    continue;
                }
                let (sa, sb) = (ss[j], ss[j + 1]);
                let ds = sb - sa;
                let hat_a = |y: f64| (sb - rate.tail_integral(y) / t0) / ds;
                let piece = |hat: &dyn Fn(f64) -> f64| {
                    let f = |y: f64| res.density(x, y) * rate.omega(y) * hat(y);
                    let split = if x > lo && x < hi { vec![lo, x, hi] } else { vec![lo, hi] };
                    split
                        .windows(2)
                        .map(|w| {
                            if w[1].is_infinite() {
                                integrate_to_inf(f, w[0], 1e-15, 1e-10).value
                            } else {
                                integrate(f, w[0], w[1], 1e-15, 1e-10).value
                            }
                        })
                        .sum::<f64>()
                };
                let a = piece(&hat_a);
                let b = piece(&|y| 1.0 - hat_a(y));
                let trap = 0.5 * t0 * ds;
                let at_lo = if lo == x { res.density_above(x) } else { res.density(x, lo) };
                out.push((j, a - trap * res.density(x, hi)));
                out.push((j + 1, b - trap * at_lo));
            }
            out
        })
        .collect();
    let row = |i: usize| -> Vec<f64> {
        let x = ys[i];
        if x.is_infinite() {
            return vec![0.0; m];
        }
        let mut r: Vec<f64> = ys.iter().enumerate().map(|(j, &y)| (above[j] + below[j]) * res.density(x, y)).collect();
        r[i] = above[i] * res.density_above(x) + below[i] * res.density(x, x);
        for &(j, d) in &corrections[i] {
            r[j] += d;
        }
        r
    };
    let stored: Option<Vec<Vec<f64>>> = (m * m <= STORED_ENTRIES).then(|| (0..m).into_par_iter().map(row).collect());
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(
        ys.iter()
            .map(|&y| if y.is_infinite() { 1.0 } else { -(-res.p * y).exp_m1() })
            .collect::<Vec<f64>>(),
    );
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    for n in 1..=n_max {
        let prev = &values[n - 1];
        let next: Vec<f64> = match &stored {
            Some(matrix) => matrix.par_iter().map(|r| n as f64 * dot(r, prev)).collect(),
            None => (0..m).into_par_iter().map(|i| n as f64 * dot(&row(i), prev)).collect(),
        };
        values.push(next);
    }
    let picked = values
        .into_iter()
        .map(|col| {
            points
                .iter()
                .map(|&x| {
                    let j = ys.iter().position(|&y| y == x).expect("user points are nodes");
                    col[j]
                })
                .collect()
        })
        .collect();
    Ok(Pass { values: picked })
}

/// Tables `m_0, …, m_{n_max}` at the points of `grid` (all `> 0`).
pub fn moment_recursion(model: &LevyModel, rate: &RateFunction, n_max: usize, grid: &[f64]) -> Result<Vec<MomentTable>> {
    moment_recursion_with(model, rate, n_max, grid, &MomentOptions::default())
}

pub fn moment_recursion_with(
    model: &LevyModel,
    rate: &RateFunction,
    n_max: usize,
    grid: &[f64],
    opts: &MomentOptions,
) -> Result<Vec<MomentTable>> {
    check_preconditions(model, rate)?;
    if grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("moment grid points must be positive and finite".into()));
    }
    if opts.panels < 4 {
        return Err(Error::Domain("need at least 4 panels".into()));
    }
    let res = Resolvent::new(model, opts)?;
    let integral = omega_wp_with(&res, rate)?;
    let min_x = grid.iter().copied().fold(f64::INFINITY, f64::min);
    // start of the mapped range: 0 unless ∫_0 ω diverges
    let y0 = if rate.tail_integral(0.0).is_finite() {
        0.0
    } else {
        (1e-3f64).min(0.1 * min_x)
    };
    let head = if y0 > 0.0 {
        integrate(|y| rate.omega(y) * res.wp(y), 0.0, y0, 1e-14, 1e-9).value
    } else {
        0.0
    };
    let mut points: Vec<f64> = grid.to_vec();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let coarse = solve_pass(&res, rate, y0, &points, opts.panels, n_max)?;
    let fine = solve_pass(&res, rate, y0, &points, 2 * opts.panels, n_max)?;
    let p = res.p;
    let mut factorial = 1.0;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            factorial *= n as f64;
        }
        let prev_bound = if n > 0 { factorial / n as f64 * integral.powi(n as i32 - 1) } else { 0.0 };
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| {
                if n == 0 {
                    -(-p * x).exp_m1()
                } else {
                    fine.values[n][points.iter().position(|&q| q == x).unwrap()]
                }
            })
            .collect();
        let bound: Vec<f64> = grid
            .iter()
            .map(|&x| {
                if n == 0 {
                    return 0.0;
                }
                let j = points.iter().position(|&q| q == x).unwrap();
                (fine.values[n][j] - coarse.values[n][j]).abs() + n as f64 * prev_bound * head
            })
            .collect();
        out.push(MomentTable {
            order: n,
            grid: grid.to_vec(),
            values,
            quadrature_bound: bound,
            factorial_bound: factorial * integral.powi(n as i32),
        });
    }
    Ok(out)
}

/// `E_x[e^{q T∞⁺}; T∞⁺ < T₀⁻]` from the moment series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMoment {
    pub value: f64,
    pub terms: usize,
    /// Geometric bound on the omitted terms.
    pub remainder_bound: f64,
    /// Sum of the quadrature bounds of the included terms.
    pub quadrature_bound: f64,
    /// `(∫_0^∞ ω W_p)^{-1}`.
    pub radius: f64,
}

/// Sum `Σ qⁿ/n! m_n(x)` until the geometric remainder
/// `(|q|I)^{N+1}/(1 − |q|I)` falls below `1e−10` (at most 200 terms).
pub fn exp_moment(model: &LevyModel, rate: &RateFunction, q: f64, x: f64) -> Result<ExpMoment> {
    check_preconditions(model, rate)?;
    let integral = omega_wp_integral(model, rate)?;
    let radius = 1.0 / integral;
    if !(q.abs() < radius) {
        return Err(Error::Domain(format!("|q| = {} must be below the radius {radius}", q.abs())));
    }
    let ratio = q.abs() * integral;
    let mut terms = 0usize;
    let mut rem = f64::INFINITY;
    while terms < 200 {
        rem = ratio.powi(terms as i32 + 1) / (1.0 - ratio);
        if rem < 1e-10 {
            break;
        }
        terms += 1;
    }
    if q == 0.0 {
        terms = 0;
        rem = 0.0;
    }
    let tables = moment_recursion(model, rate, terms, &[x])?;
    let (mut value, mut qb, mut coef) = (0.0, 0.0, 1.0);
    for (n, t) in tables.iter().enumerate() {
        if n > 0 {
            coef *= q / n as f64;
        }
        value += coef * t.values[0];
        qb += coef.abs() * t.quadrature_bound[0];
    }
    Ok(ExpMoment {
        value,
        terms: terms + 1,
        remainder_bound: rem,
        quadrature_bound: qb,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpDensity, JumpSpec, ModelSpec};
    use crate::scale_functions::{compute_scale, default_grid, ScaleOptions};

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

    /// `m_1(x) = ∫ u(x,y) ω(y) m_0(y) dy` by adaptive quadrature against
    /// the scale table's resolvent density.
    fn first_moment_oracle(model: &LevyModel, rate: &RateFunction, x: f64) -> f64 {
        let table = compute_scale(model, 0.0, &default_grid(), &ScaleOptions::default()).unwrap();
        let p = model.p();
        let f = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            table.resolvent_density(x, y).unwrap() * rate.omega(y) * -(-p * y).exp_m1()
        };
        // beyond 60 the density is its renewal limit to double precision
        let far = -(-p * x).exp_m1() / model.gamma() * rate.tail_integral(60.0);
        integrate(f, 0.0, x, 1e-11, 1e-9).value + integrate(f, x, 60.0, 1e-11, 1e-9).value + far
    }

    #[test]
    fn zeroth_moment_is_explosion_probability() {
        let r = RateFunction::power(1.0, 2.0).unwrap();
        let t = moment_recursion(&bm(), &r, 0, &[1.0]).unwrap();
        assert_eq!(t[0].values[0], 1.0 - (-1.0f64).exp());
    }

    #[test]
    fn first_moment_matches_direct_quadrature() {
        for (model, rate) in [
            (bm(), RateFunction::power(1.0, 2.0).unwrap()),
            (bm(), RateFunction::exponential(1.0).unwrap()),
            (cp(), RateFunction::power(1.0, 2.0).unwrap()),
        ] {
            let xs = [0.3, 1.0, 4.0];
            let t = moment_recursion(&model, &rate, 1, &xs).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                let oracle = first_moment_oracle(&model, &rate, x);
                let got = t[1].values[i];
                assert!(
                    (got - oracle).abs() < 1e-5 * oracle + t[1].quadrature_bound[i],
                    "x={x}: {got} vs {oracle}"
                );
                assert!(t[1].quadrature_bound[i] < 1e-4 * oracle, "x={x}: bound {}", t[1].quadrature_bound[i]);
            }
        }
    }

    #[test]
    fn first_moment_tracks_phi_for_large_x() {
        let r = RateFunction::power(1.0, 2.0).unwrap();
        let xs = [10.0, 40.0, 160.0];
        let t = moment_recursion(&bm(), &r, 2, &xs).unwrap();
        let gaps: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (t[1].values[i] * (1.0 + x) - 1.0).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 0.02, "{gaps:?}");
        // m_2 ∼ φ²
        let r2 = t[2].values[2] * (1.0 + xs[2]).powi(2);
        assert!((r2 - 1.0).abs() < 0.05, "{r2}");
    }

    #[test]
    fn factorial_bound_holds() {
        let r = RateFunction::exponential(1.0).unwrap();
        let t = moment_recursion(&bm(), &r, 6, &[0.5, 1.0, 3.0]).unwrap();
        for tab in &t {
            assert!(tab.within_factorial_bound(), "order {}", tab.order);
        }
    }

    #[test]
    fn exponential_moment_series() {
        let r = RateFunction::exponential(1.0).unwrap();
        let zero = exp_moment(&bm(), &r, 0.0, 1.0).unwrap();
        assert_eq!(zero.value, 1.0 - (-1.0f64).exp());
        let neg = exp_moment(&bm(), &r, -0.1 * zero.radius, 1.0).unwrap();
        assert!(neg.value > 0.0 && neg.value < zero.value);
        let half = exp_moment(&bm(), &r, 0.5 * zero.radius, 1.0).unwrap();
        assert!(half.remainder_bound < 1e-8);
        assert!(half.value > zero.value);
        assert!(matches!(exp_moment(&bm(), &r, 2.0 * zero.radius, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn preconditions() {
        let r = RateFunction::constant(1.0).unwrap();
        assert!(matches!(
            moment_recursion(&bm(), &r, 1, &[1.0]),
            Err(Error::Precondition { .. })
        ));
        let down = LevyModel::brownian(2.0, -1.0).unwrap();
        let r = RateFunction::power(1.0, 2.0).unwrap();
        assert!(moment_recursion(&down, &r, 1, &[1.0]).is_err());
    }

    #[test]
    fn singular_rate_at_zero() {
        // R(x) = x^{3/2}: ∫_0 dy/R diverges but W_p(y) ≍ y keeps H1
        let r = RateFunction::power(0.0, 1.5).unwrap();
        let t = moment_recursion(&bm(), &r, 1, &[1.0, 5.0]).unwrap();
        assert!(t[1].values.iter().all(|v| v.is_finite() && *v > 0.0));
        let r = RateFunction::power(0.0, 2.0).unwrap();
        assert!(matches!(moment_recursion(&bm(), &r, 1, &[1.0]), Err(Error::Precondition { .. })));
    }
}
