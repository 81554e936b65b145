pub mod digest;
pub mod error;
pub mod explosion;
pub mod levy_model;
pub mod numeric;
pub mod omega_scale;
pub mod runner;
pub mod scale_functions;
pub mod simulation;

pub use error::{Error, Result};
pub use levy_model::{JumpDensity, JumpSpec, LevyModel, ModelSpec};
