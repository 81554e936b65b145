//! Rate functions and the `ω`-weighted fluctuation identities.

pub mod conditions;
mod h_omega;
pub mod rate;
mod volterra;

pub use conditions::{check_h0_h1_h2, classify_boundaries, BoundaryReport, ConditionReport, Verdict};
pub use h_omega::{downward_laplace, downward_laplace_with, h_omega, DownwardLaplace, HOmega, HOptions};
pub use rate::{ConstantWeight, RateFunction, RateSpec, ScaledWeight, TailSpec, Weight};
pub use volterra::{solve_w_omega, weighted_exit, FormCheck, OmegaGrid, OmegaScaleTable};
