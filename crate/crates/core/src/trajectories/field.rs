use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::density_and_current;
use crate::propagate::SnapshotHistory;
use crate::wavefunction::{cell_flux, WaveFunction};

/// Density floor relative to the frame's peak density.
pub const RHO_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityOptions {
    pub rho_floor_rel: f64,
    /// Absolute speed beyond which the field is treated as singular.
    pub velocity_cap: f64,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        Self { rho_floor_rel: RHO_FLOOR_REL, velocity_cap: f64::INFINITY }
    }
}

fn guarded(rho: f64, j: f64, floor: f64, x: f64, t: f64, cap: f64) -> Result<f64> {
    if rho.is_nan() || rho < floor || rho <= 0.0 {
        return Err(Error::NodeProximity { x, t, rho, floor });
    }
    let v = j / rho;
    if v.abs() > cap {
        return Err(Error::VelocityCap { x, t, v, cap });
    }
    Ok(v)
}

fn peak(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
}

/// `v = j / |psi|^2` from the cubic interpolant of `wf`.
pub fn bohmian_velocity(wf: &WaveFunction, x: f64, options: &VelocityOptions) -> Result<f64> {
    wf.grid().check_contains(x)?;
    let g = wf.grid();
    let (rho, j) = density_and_current(wf.values(), g.x_min(), g.dx(), x);
    guarded(rho, j, options.rho_floor_rel * peak(wf.values()), x, wf.t(), options.velocity_cap)
}

/// Guidance field on a snapshot history, built so that the right-mass of
/// every trajectory is conserved on the lattice: density linear in space and
/// in time, flux from the interval-averaged link currents.
#[derive(Debug, Clone, Copy)]
pub struct VelocityField<'a> {
    history: &'a SnapshotHistory,
    options: VelocityOptions,
}

impl<'a> VelocityField<'a> {
    pub fn new(history: &'a SnapshotHistory, options: VelocityOptions) -> Self {
        Self { history, options }
    }

    pub fn history(&self) -> &'a SnapshotHistory {
        self.history
    }

    /// Velocity at time `t_k + theta (t_{k+1} - t_k)`, `theta` in `[0, 1]`,
    /// for `x` at least one node inside the stored range.
    pub fn at(&self, k: usize, theta: f64, x: f64) -> Result<f64> {
        let h = self.history;
        let n = h.n_points();
        if h.len() < 2 || n < 4 {
            return Err(Error::InvalidArgument("guidance field needs two frames of at least four nodes".into()));
        }
        let c = (x - h.x_min()) / h.dx();
        let i = (c.floor().max(1.0) as usize).min(n - 3);
        let s = c - i as f64;
        let lin = |f: &[Complex64]| (1.0 - s) * f[i].norm_sqr() + s * f[i + 1].norm_sqr();
        let interval = k.min(h.len() - 2);
        let (rho, floor, t) = if theta > 0.0 && k + 1 < h.len() {
            let (r0, r1) = (lin(h.frame(k)), lin(h.frame(k + 1)));
            let t = h.times()[k] + theta * (h.times()[k + 1] - h.times()[k]);
            (r0 + theta * (r1 - r0), h.peak_density(k).max(h.peak_density(k + 1)), t)
        } else {
            (lin(h.frame(k)), h.peak_density(k), h.times()[k])
        };
        let links = h.link_currents(interval);
        let j = cell_flux(links[i - 1], links[i], links[i + 1], s);
        guarded(rho, j, self.options.rho_floor_rel * floor, x, t, self.options.velocity_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::packet::{gaussian_packet, GaussianPacketSpec};

    #[test]
    fn real_wave_is_at_rest() {
        let grid = make_grid(-30.0, 30.0, 1201, 0.0, 0.01, 1).unwrap();
        let mut wf = gaussian_packet(&GaussianPacketSpec::new(0.0, 2.0, 3.0), &grid).unwrap();
        wf.values_mut().iter_mut().for_each(|v| *v = Complex64::new(v.norm(), 0.0));
        assert_eq!(bohmian_velocity(&wf, 0.37, &VelocityOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn plane_wave_moves_at_two_k0() {
        let grid = make_grid(-30.0, 30.0, 1201, 0.0, 0.01, 1).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(0.0, 3.0, 1.5), &grid).unwrap();
        for &x in &[-2.0, 0.013, 1.5] {
            let v = bohmian_velocity(&wf, x, &VelocityOptions::default()).unwrap();
            assert!((v - 3.0).abs() < 1e-3, "{x}: {v}");
        }
    }

    #[test]
    fn node_is_an_error() {
        let grid = make_grid(-30.0, 30.0, 1201, 0.0, 0.01, 1).unwrap();
        // standing wave with a zero on the node at x = 1
        let values =
            grid.positions().map(|x| Complex64::new((-(x * x) / 50.0).exp() * (1.5 * (x - 1.0)).sin(), 0.0)).collect();
        let wf = WaveFunction::new(grid, 0.0, values);
        let node = 1.0;
        let err = bohmian_velocity(&wf, node, &VelocityOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NodeProximity { .. }), "{err}");
    }

    #[test]
    fn history_field_conserves_right_mass() {
        use crate::potential::PiecewisePotential;
        use crate::propagate::{propagate_and_record, RecordOptions, SnapshotOptions};
        use crate::trajectories::integrate::integrate_trajectory;

        let grid = make_grid(-60.0, 60.0, 961, 0.0, 0.05, 100).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(-20.0, 3.0, 1.5), &grid).unwrap();
        let options =
            RecordOptions::new(vec![40.0]).with_snapshots(SnapshotOptions { keep_every: 2, ..Default::default() });
        let run = propagate_and_record(&wf, &PiecewisePotential::zero(), &options).unwrap();
        let h = run.history.unwrap();
        let x0 = -18.7;
        let m0 = h.right_mass(0, x0);
        let path = integrate_trajectory(x0, &h, 0.0, h.times()[h.len() - 1], &VelocityOptions::default()).unwrap();
        let drift = path.iter().enumerate().map(|(k, &x)| (h.right_mass(k, x) - m0).abs()).fold(0.0, f64::max);
        // RK4 truncation only; a non-conservative field drifts by ~1e-2 here
        assert!(drift < 1e-6, "{drift}");
    }
}
