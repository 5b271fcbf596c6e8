use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagate::SnapshotHistory;
use crate::trajectories::field::{VelocityField, VelocityOptions};

/// Upper bound on RK4 sub-steps per frame interval.
const MAX_SUBSTEPS: usize = 4096;
/// RK4 substeps per cell crossed; the field has kinks at the nodes.
const SUBSTEPS_PER_CELL: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    Transmitted,
    Reflected,
}

/// A world line sampled on the history's frame times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x0: f64,
    pub t_start: f64,
    /// Frame spacing of `path`.
    pub dt: f64,
    pub path: Vec<f64>,
    pub label: Label,
    pub dwell: f64,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn final_position(&self) -> f64 {
        *self.path.last().expect("non-empty path")
    }
}

fn frame_index(history: &SnapshotHistory, t: f64) -> Result<usize> {
    history.index_of(t).ok_or_else(|| Error::Coverage {
        from: t,
        to: t,
        start: history.times().first().copied().unwrap_or(f64::NAN),
        end: history.times().last().copied().unwrap_or(f64::NAN),
    })
}

/// RK4 through the interpolated guidance field from `t_from` to `t_to`
/// (both frame times), returning the position at every frame in between.
///
/// The base step is the frame interval; it is split so that no sub-step moves
/// more than one grid spacing at the speeds seen at the interval ends.
pub fn integrate_trajectory(
    x0: f64,
    history: &SnapshotHistory,
    t_from: f64,
    t_to: f64,
    options: &VelocityOptions,
) -> Result<Vec<f64>> {
    let k0 = frame_index(history, t_from)?;
    let k1 = frame_index(history, t_to)?;
    if k1 < k0 {
        return Err(Error::InvalidArgument(format!("t_to {t_to} precedes t_from {t_from}")));
    }
    let dx = history.dx();
    let (lo, hi) = (history.x_min() + dx, history.x_max() - dx);
    let inside = |x: f64, t: f64| if x >= lo && x <= hi { Ok(()) } else { Err(Error::Escape { x, t }) };
    inside(x0, t_from)?;

    let field = VelocityField::new(history, *options);
    let times = history.times();
    let mut path = Vec::with_capacity(k1 - k0 + 1);
    let mut x = x0;
    path.push(x);
    for k in k0..k1 {
        let h = times[k + 1] - times[k];
        let t_at = |theta: f64| times[k] + theta * h;
        let min_step = 1.0 / MAX_SUBSTEPS as f64;
        let mut theta = 0.0;
        while theta < 1.0 {
            let v1 = field.at(k, theta, x)?;
            let cells = v1.abs() * h / dx * SUBSTEPS_PER_CELL;
            let dtheta = if cells > 0.0 { (1.0 / cells).max(min_step) } else { 1.0 }.min(1.0 - theta);
            let hs = dtheta * h;
            let xm = x + 0.5 * hs * v1;
            inside(xm, t_at(theta))?;
            let v2 = field.at(k, theta + 0.5 * dtheta, xm)?;
            let xm = x + 0.5 * hs * v2;
            inside(xm, t_at(theta))?;
            let v3 = field.at(k, theta + 0.5 * dtheta, xm)?;
            let xe = x + hs * v3;
            inside(xe, t_at(theta))?;
            let next = if 1.0 - theta - dtheta < 1e-12 { 1.0 } else { theta + dtheta };
            let v4 = field.at(k, next, xe)?;
            x += hs / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
            theta = next;
            inside(x, t_at(theta))?;
        }
        path.push(x);
    }
    Ok(path)
}

/// Time spent in `[a, b]` by a point moving linearly from `x0` at `t0` to `x1` at `t1`.
pub fn time_inside(x0: f64, x1: f64, t0: f64, t1: f64, a: f64, b: f64) -> f64 {
    let span = t1 - t0;
    if span <= 0.0 {
        return 0.0;
    }
    if x0 == x1 {
        return if x0 >= a && x0 <= b { span } else { 0.0 };
    }
    let ua = (a - x0) / (x1 - x0);
    let ub = (b - x0) / (x1 - x0);
    let lo = ua.min(ub).max(0.0);
    let hi = ua.max(ub).min(1.0);
    if hi > lo {
        (hi - lo) * span
    } else {
        0.0
    }
}

/// Measure of `{t in [tau_i, tau_f] : path(t) in [a, b]}` with the path linear
/// between samples `t_start + k dt`.
pub fn trajectory_dwell(t_start: f64, dt: f64, path: &[f64], a: f64, b: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    let end = t_start + (path.len().saturating_sub(1)) as f64 * dt;
    let eps = 1e-9 * dt.max(1e-300);
    if path.len() < 2 || tau_i < t_start - eps || tau_f > end + eps || tau_f < tau_i {
        return Err(Error::Coverage { from: tau_i, to: tau_f, start: t_start, end });
    }
    let mut total = 0.0;
    for k in 0..path.len() - 1 {
        let (t0, t1) = (t_start + k as f64 * dt, t_start + (k + 1) as f64 * dt);
        let (s0, s1) = (t0.max(tau_i), t1.min(tau_f));
        if s1 <= s0 {
            continue;
        }
        let lerp = |t: f64| path[k] + (path[k + 1] - path[k]) * (t - t0) / dt;
        total += time_inside(lerp(s0), lerp(s1), s0, s1, a, b);
    }
    Ok(total)
}
