//! Bohmian trajectories through a recorded wave-function history, used as an
//! independent route to the transmission and reflection times.

pub mod critical;
pub mod ensemble;
pub mod field;
pub mod integrate;

pub use critical::{critical_initial_point, critical_trajectory_drift, quantile_starts};
pub use ensemble::{ensemble_times, Casualty, EnsembleOptions, EnsembleOutcome, Scheme, TrajectoryEnsemble};
pub use field::{bohmian_velocity, VelocityField, VelocityOptions};
pub use integrate::{integrate_trajectory, time_inside, trajectory_dwell, Label, Trajectory};
