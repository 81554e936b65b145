//! Interpolation on uniform grids.

/// Four-point Lagrange interpolation on a uniform grid `x_k = k·h`,
/// `k = 0..values.len()`. Arguments beyond the last node return `None`.
#[derive(Debug, Clone)]
pub struct UniformCubic {
    h: f64,
    values: Vec<f64>,
}

impl UniformCubic {
    pub fn new(h: f64, values: Vec<f64>) -> Self {
        assert!(h > 0.0 && values.len() >= 4, "need a positive step and at least four nodes");
        UniformCubic { h, values }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn upper(&self) -> f64 {
        self.h * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        if x < 0.0 || x > self.upper() {
            return None;
        }
        let n = self.values.len();
        let u = x / self.h;
        let mut i = (u.floor() as usize).min(n - 2);
        let frac = u - i as f64;
        if frac == 0.0 {
            return Some(self.values[i]);
        }
        // nodes i-1..i+2, shifted at the ends
        if i == 0 {
            i = 1;
        }
        if i + 2 >= n {
            i = n - 3;
        }
        let t = u - i as f64;
        let (y0, y1, y2, y3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // Lagrange basis on nodes -1, 0, 1, 2
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        Some(y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3)
    }
}

/// Linear interpolation on sorted abscissae; clamps outside the range.
pub fn linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let h = 0.1;
        let f = |x: f64| 2.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        let vals: Vec<f64> = (0..40).map(|k| f(k as f64 * h)).collect();
        let c = UniformCubic::new(h, vals);
        for &x in &[0.0, 0.03, 0.57, 2.222, 3.9] {
            assert!((c.eval(x).unwrap() - f(x)).abs() < 1e-12, "x={x}");
        }
        assert!(c.eval(4.0).is_none());
    }

    #[test]
    fn linear_clamps() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 2.0, 4.0];
        assert_eq!(linear(&xs, &ys, -1.0), 0.0);
        assert_eq!(linear(&xs, &ys, 2.0), 3.0);
        assert_eq!(linear(&xs, &ys, 10.0), 4.0);
    }
}
