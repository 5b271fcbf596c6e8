use crate::error::{Error, Result};
use crate::propagate::SnapshotHistory;
use crate::trajectories::field::VelocityOptions;
use crate::trajectories::integrate::integrate_trajectory;
use crate::wavefunction::WaveFunction;

/// Initial position whose right-mass equals `t2`: starts to its right end up
/// transmitted, starts to its left reflected. Leftmost solution on plateaus.
pub fn critical_initial_point(wf0: &WaveFunction, t2: f64) -> Result<f64> {
    if !(t2 > 0.0 && t2 < 1.0) {
        return Err(Error::Degenerate(t2));
    }
    let profile = wf0.right_mass_profile();
    profile.position_of(t2 * profile.total())
}

/// Starts at the `k/(n+1)` quantiles of `|psi|^2`, `k = 1..=n`, left to right.
pub fn quantile_starts(wf0: &WaveFunction, n: usize) -> Result<Vec<f64>> {
    let profile = wf0.right_mass_profile();
    let total = profile.total();
    (1..=n).map(|k| profile.position_of(total * (1.0 - k as f64 / (n + 1) as f64))).collect()
}

/// Largest `|right_mass(t, gamma(t)) - t2|` along the trajectory started at `x_c`.
pub fn critical_trajectory_drift(
    history: &SnapshotHistory,
    x_c: f64,
    t2: f64,
    options: &VelocityOptions,
) -> Result<(Vec<f64>, f64)> {
    let times = history.times();
    let path = integrate_trajectory(x_c, history, times[0], times[times.len() - 1], options)?;
    let drift = path.iter().enumerate().map(|(k, &x)| (history.right_mass(k, x) - t2).abs()).fold(0.0, f64::max);
    Ok((path, drift))
}
