//! Integral tests for extinction and explosion, and the regime of each rate.

use lamperti::explosion::estimate_lambda;
use lamperti::omega_scale::{check_h0_h1_h2, classify_boundaries, RateFunction};
use lamperti::LevyModel;

fn main() -> lamperti::Result<()> {
    let model = LevyModel::brownian(2.0, 1.0)?;
    let rates = [
        ("constant", RateFunction::constant(1.0)?),
        ("x", RateFunction::power(0.0, 1.0)?),
        ("(1+x)^2", RateFunction::power(1.0, 2.0)?),
        ("x^2", RateFunction::power(0.0, 2.0)?),
        ("e^x", RateFunction::exponential(1.0)?),
    ];
    println!("{:<10} {:<10} {:<10} {:<6} {:<6} {:<8} {}", "R", "extinct", "explode", "H0", "H1", "lambda", "regime");
    for (name, r) in &rates {
        let b = classify_boundaries(&model, r)?;
        let h = check_h0_h1_h2(&model, r)?;
        let regime = if h.h0.as_str() == "yes" { Some(estimate_lambda(r, model.gamma())?) } else { None };
        println!(
            "{name:<10} {:<10} {:<10} {:<6} {:<6} {:<8} {}",
            b.extinction.as_str(),
            b.explosion.as_str(),
            h.h0.as_str(),
            h.h1.as_str(),
            regime.as_ref().and_then(|r| r.lambda).map_or("-".into(), |l| format!("{l}")),
            regime.as_ref().and_then(|r| r.regime).map_or("-".into(), |g| format!("{g:?}")),
        );
    }
    Ok(())
}
