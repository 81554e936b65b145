//! Numerical building blocks shared by the analytic modules.

pub mod interp;
pub mod quad;
pub mod roots;
pub mod talbot;

/// `e^{-u} - 1 + u` without cancellation for small `u`.
pub fn exp_m1_plus(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        u2 * (0.5 - u / 6.0 + u2 / 24.0 - u2 * u / 120.0)
    } else {
        (-u).exp_m1() + u
    }
}

/// `(1 - e^{-u}) / u`, equal to 1 at `u = 0`.
pub fn one_minus_exp_over(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - 0.5 * u
    } else {
        -(-u).exp_m1() / u
    }
}

/// Format a number with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{}e{}{:02}", m, if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_m1_plus_matches_direct_formula_away_from_zero() {
        for &u in &[-2.0, -0.5, 0.01, 0.3, 4.0] {
            let direct = (-u as f64).exp() - 1.0 + u;
            assert!((exp_m1_plus(u) - direct).abs() < 1e-14);
        }
        let small = 0.5e-12 - 1e-18 / 6.0 + 1e-24 / 24.0;
        assert!((exp_m1_plus(1e-6) - small).abs() < 1e-14 * small);
    }

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(std::f64::consts::E - 1.0), "1.71828182846");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-0.25), "-0.25");
        assert_eq!(fmt_g12(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_g12(0.000123), "0.000123");
    }
}
