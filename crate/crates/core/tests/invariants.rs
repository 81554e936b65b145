use lamperti::explosion::{moment_recursion, phi_and_inverse};
use lamperti::omega_scale::RateFunction;
use lamperti::scale_functions::{compute_scale, default_grid, ScaleOptions};
use lamperti::simulation::{lamperti_transform, monte_carlo, Estimator, ExperimentSpec, SimConfig, Simulator};
use lamperti::{JumpDensity, JumpSpec, LevyModel, ModelSpec};
use proptest::prelude::*;

fn jump_model(sigma2: f64, rate: f64, beta: f64) -> LevyModel {
    // μ picked so that γ = 1 whatever the jump part
    let mean_big = rate * (-beta).exp() * (1.0 + beta) / beta;
    LevyModel::new(ModelSpec {
        sigma2,
        mu: 1.0 - mean_big,
        jumps: JumpSpec::CompoundPoisson {
            rate,
            density: JumpDensity::Exponential { beta },
        },
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_is_pinned(sigma2 in 0.0..2.0f64, rate in 0.1..3.0f64, beta in 0.5..4.0f64) {
        let m = jump_model(sigma2, rate, beta);
        prop_assert!((m.gamma() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phi_round_trip(c in 0.5..3.0f64, theta in 1.5..4.0f64, x in 0.0..1e4f64) {
        let rate = RateFunction::power(c, theta).unwrap();
        let phi = phi_and_inverse(&rate, 1.0).unwrap();
        let t = phi.phi(x);
        let back = phi.inverse(t).unwrap();
        prop_assert!((back - x).abs() <= 1e-7 * (1.0 + x), "x = {x}, back = {back}");
    }

    #[test]
    fn path_invariants(seed in any::<u64>(), sigma2 in 0.2..2.0f64, rate in 0.1..2.0f64, beta in 0.5..3.0f64) {
        let m = jump_model(sigma2, rate, beta);
        let r = RateFunction::power(1.0, 2.0).unwrap();
        let mut cfg = SimConfig::new(2e-3, 30.0, 0.0, 1e3);
        cfg.seed = seed;
        cfg.levels = vec![0.5, 2.0, 10.0];
        let sim = Simulator::new(&m, &r, &cfg).unwrap();
        let (path, _) = sim.run(1.0, 0).unwrap();
        prop_assert!(path.downward_overshoot_excess() <= 0.0);
        prop_assert!(path.eta.windows(2).all(|w| w[1] >= w[0]));
        let n = path.len() - 1;
        let k = n / 3;
        let split = path.functional(&r, 0.0, 0, k) + path.functional(&r, 0.0, k, n);
        prop_assert!((split - path.functional(&r, 0.0, 0, n)).abs() <= 1e-12 * split.max(1.0));
        let x = lamperti_transform(&path).unwrap();
        for e in &path.events {
            let hit = x.values.iter().position(|&v| if e.upward { v >= e.level } else { v < e.level });
            prop_assert_eq!(hit.map(|k| x.times[k]), Some(e.eta));
        }
        // replaying the same replicate gives the same path
        let (again, _) = sim.run(1.0, 0).unwrap();
        prop_assert_eq!(again.xi, path.xi);
    }

    #[test]
    fn resolvent_density_is_nonnegative(rate in 0.1..2.0f64, beta in 0.5..3.0f64, x in 0.05..5.0f64, y in 0.0..20.0f64) {
        let m = jump_model(0.5, rate, beta);
        let t = compute_scale(&m, 0.0, &default_grid(), &ScaleOptions::default()).unwrap();
        prop_assert!(t.resolvent_density(x, y).unwrap() >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn moments_within_factorial_bound(theta in 1.5..3.0f64, c in 0.5..2.0f64) {
        let m = LevyModel::brownian(2.0, 1.0).unwrap();
        let r = RateFunction::power(c, theta).unwrap();
        let tables = moment_recursion(&m, &r, 3, &[0.5, 2.0]).unwrap();
        prop_assert!(tables.iter().all(|t| t.within_factorial_bound()));
    }
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let m = jump_model(1.0, 1.0, 1.0);
    let r = RateFunction::power(1.0, 2.0).unwrap();
    let mut cfg = SimConfig::new(5e-3, 50.0, 0.0, 1e3);
    cfg.seed = 3;
    cfg.replicates = 400;
    let spec = ExperimentSpec {
        estimator: Estimator::ExplosionTime,
        start: 1.0,
        condition_on_explosion: false,
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| monte_carlo(&m, &r, &spec, &cfg).unwrap())
    };
    let (one, many) = (run(1), run(4));
    assert_eq!(one.accepted, many.accepted);
    assert_eq!(
        one.summary.map(|s| s.mean.to_bits()),
        many.summary.map(|s| s.mean.to_bits())
    );
}
