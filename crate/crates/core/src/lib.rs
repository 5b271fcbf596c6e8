//! Bohmian transmission, reflection and dwell times for one-dimensional
//! scattering.
//!
//! Two independent routes are provided. [`observables`] evaluates the times
//! from the running probability fluxes through the interval edges, which needs
//! nothing beyond the edge currents of a single propagation. [`trajectories`]
//! integrates an ensemble of Bohmian world lines through the stored wave
//! function and averages their sojourn times; it is far more expensive and
//! serves as the reference.
//!
//! Units are reduced so that `i d_t psi = (-d_x^2 + V) psi`, with `V` in units
//! of the central barrier height and kinetic energy `k^2`.

pub mod error;
pub mod exec;
pub mod grid;
pub mod interp;
pub mod observables;
pub mod packet;
pub mod potential;
pub mod propagate;
pub mod scenario;
pub mod trajectories;
pub mod wavefunction;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
pub use grid::{make_grid, SimulationGrid};
pub use packet::{gaussian_packet, GaussianPacketSpec};
pub use potential::{double_barrier, PiecewisePotential, Segment};
pub use propagate::{
    propagate_and_record, step, CrankNicolson, RecordOptions, RunRecord, SnapshotHistory, SnapshotOptions,
};
pub use scenario::{Scenario, Simulation, TrajectorySettings};
pub use wavefunction::WaveFunction;
