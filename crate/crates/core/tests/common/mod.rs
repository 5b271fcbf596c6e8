#![allow(dead_code)]

use dwelltime::{double_barrier, GaussianPacketSpec, Scenario, SimulationGrid, SnapshotOptions};

/// The default double barrier on a smaller grid and a shorter run.
pub fn small_double_barrier() -> Scenario {
    let mut s = Scenario::double_barrier_default();
    s.grid = SimulationGrid::new(-400.0, 400.0, 6401, 0.0, 0.05, 1600).unwrap();
    s.potential = double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).unwrap();
    s.packet = GaussianPacketSpec::new(-35.0, 3.5, 1.5);
    s.window = (0.0, 40.0);
    s.snapshots = SnapshotOptions { keep_every: 2, until: Some(40.0), x_range: Some((-200.0, 200.0)) };
    s.trajectories.n = 400;
    s
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
