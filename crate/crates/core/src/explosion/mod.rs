//! Moments, regime classification and limit-theorem experiments for the
//! explosion time.

mod experiments;
mod moments;
mod regime;

pub use experiments::{
    sample_limit_law_b, verify_thm1, verify_thm2, ConvergenceRow, ConvergenceTable, LimitLawSamples, SpeedRow,
    SpeedTable, VerifyConfig,
};
pub use moments::{exp_moment, moment_recursion, moment_recursion_with, omega_wp_integral, ExpMoment, MomentOptions, MomentTable};
pub use regime::{
    estimate_lambda, phi_and_inverse, prop46_checks, PhiFunctions, Regime, RegimeReport, SideCondition, TailAsymptotics,
    TailCase, TailRow,
};
