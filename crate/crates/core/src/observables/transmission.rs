use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::flux::ProbeSeries;
use crate::wavefunction::WaveFunction;

/// Largest edge current tolerated over the settle window.
pub const SETTLE_FLUX_LIMIT: f64 = 1e-5;
/// Allowed gap between `f_b(t_final)` and the final right-mass at `b`.
pub const READOUT_CROSS_CHECK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionReadout {
    /// `|T|^2 = f_b(t_final)`, clipped to `[0, 1]` against round-off
    pub t2: f64,
    pub readout_time: f64,
    /// Earliest time at which the trailing window already met the criterion.
    pub settled_since: f64,
    /// `max |j(., b)|` over the final settle window.
    pub residual: f64,
}

impl TransmissionReadout {
    pub fn r2(&self) -> f64 {
        1.0 - self.t2
    }

    /// Compares against `right_mass(final, b)`.
    pub fn cross_check(&self, final_state: &WaveFunction, b: f64, tolerance: f64) -> Result<f64> {
        let mass = final_state.right_mass(b)?;
        let gap = (mass - self.t2).abs();
        if gap > tolerance {
            return Err(Error::Invariant(format!(
                "f_b(t_final) = {} but right-mass at b = {mass} (gap {gap:e})",
                self.t2
            )));
        }
        Ok(gap)
    }
}

/// `|T|^2` read off the running flux at the right edge once scattering has
/// concluded, i.e. `max |j|` over the last `settle_window` samples is below `limit`.
pub fn transmission_probability(
    edge: &ProbeSeries,
    times: &[f64],
    settle_window: usize,
    limit: f64,
) -> Result<TransmissionReadout> {
    let n = edge.j.len();
    if n == 0 || times.len() != n {
        return Err(Error::InvalidArgument("empty or mismatched flux series".into()));
    }
    let w = settle_window.clamp(1, n);
    let residual = edge.j[n - w..].iter().map(|j| j.abs()).fold(0.0, f64::max);
    if residual >= limit {
        return Err(Error::NotAsymptotic { residual, limit });
    }
    // earliest k whose trailing window [k-w+1, k] is quiet
    let settled = edge.j.iter().rposition(|j| j.abs() >= limit).map_or(0, |k| (k + 1).min(n - 1));
    Ok(TransmissionReadout {
        t2: edge.f[n - 1].clamp(0.0, 1.0),
        readout_time: times[n - 1],
        settled_since: times[settled],
        residual,
    })
}
