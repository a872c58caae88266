pub mod functional;
pub mod operator;
pub mod params;
pub mod potential;
pub mod thresholds;

pub use functional::{
    energy_eps, energy_frozen, nehari_value, residual, residual_frozen, theta_project,
};
pub use operator::{EnergyParts, SystemOperator};
pub use params::{FrozenParams, ModelParams};
pub use potential::{eval_potential, PotentialSpec};
pub use thresholds::{
    ball_minima, ball_thresholds, global_thresholds, h_func, local_thresholds, GlobalThresholds,
    LocalThresholds,
};
