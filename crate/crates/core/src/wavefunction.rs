//! Wave-function snapshots and the quantities read off a single instant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::interp;

/// Complex amplitudes on every grid node at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SimulationGrid,
    t: f64,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: SimulationGrid, t: f64, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.n_points(), "one amplitude per node");
        Self { grid, t, values }
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Trapezoid `L2` norm squared.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.density(), self.grid.dx())
    }

    pub fn normalize(&mut self) {
        let scale = 1.0 / self.norm().sqrt();
        self.values.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn right_mass_profile(&self) -> RightMassProfile {
        RightMassProfile::new(&self.density(), self.grid.x_min(), self.grid.dx())
    }

    /// `int_q^{x_max} |psi|^2` with the density linear between nodes.
    pub fn right_mass(&self, q: f64) -> Result<f64> {
        self.grid.check_contains(q)?;
        Ok(right_mass_of(&self.values, self.grid.x_min(), self.grid.dx(), q))
    }

    /// Probability current `2 Im(conj(psi) d_x psi)` at `q`.
    ///
    /// On a node the derivative is the central difference; between nodes the
    /// cubic interpolant is used.
    pub fn current_density(&self, q: f64) -> Result<f64> {
        self.grid.check_contains(q)?;
        Ok(current_of(&self.values, self.grid.x_min(), self.grid.dx(), q))
    }

    /// Interpolated `(psi, d_x psi)` at `x`.
    pub fn interpolate(&self, x: f64) -> Result<(Complex64, Complex64)> {
        self.grid.check_contains(x)?;
        Ok(interp::cubic_with_derivative(&self.values, self.grid.x_min(), self.grid.dx(), x))
    }

    pub fn mean_position(&self) -> f64 {
        let rho = self.density();
        let xs: Vec<f64> = self.grid.positions().zip(&rho).map(|(x, r)| x * r).collect();
        trapezoid(&xs, self.grid.dx()) / trapezoid(&rho, self.grid.dx())
    }

    /// Standard deviation of the position distribution.
    pub fn position_spread(&self) -> f64 {
        let rho = self.density();
        let mean = self.mean_position();
        let m2: Vec<f64> = self.grid.positions().zip(&rho).map(|(x, r)| (x - mean).powi(2) * r).collect();
        (trapezoid(&m2, self.grid.dx()) / trapezoid(&rho, self.grid.dx())).sqrt()
    }

    /// `<k> = int Im(conj(psi) d_x psi)`, central differences.
    pub fn mean_wavenumber(&self) -> f64 {
        // density-weighted phase gradient, exact for a linear phase
        let (mut acc, mut weight) = (0.0, 0.0);
        for w in self.values.windows(2) {
            let link = w[0].conj() * w[1];
            acc += link.norm() * link.arg();
            weight += link.norm();
        }
        if weight == 0.0 {
            return 0.0;
        }
        acc / (weight * self.grid.dx())
    }

    /// Discrete `<H>` with `H = -d_x^2 + V` and zero ghost nodes outside the grid.
    pub fn energy(&self, potential: &[f64]) -> f64 {
        let n = self.values.len();
        let dx = self.grid.dx();
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = 0.0;
        for (i, (&v, &p)) in self.values.iter().zip(potential).enumerate() {
            let left = if i > 0 { self.values[i - 1] } else { zero };
            let right = if i + 1 < n { self.values[i + 1] } else { zero };
            let h = (v * 2.0 - left - right) / (dx * dx) + v * p;
            acc += (v.conj() * h).re;
        }
        acc * dx
    }

    /// Largest `|psi|` over the outermost `width` nodes on either side.
    pub fn boundary_amplitude(&self, width: usize) -> f64 {
        let n = self.values.len();
        let w = width.clamp(1, n / 2);
        self.values[..w].iter().chain(&self.values[n - w..]).map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

pub(crate) fn right_mass_of(values: &[Complex64], x_min: f64, dx: f64, q: f64) -> f64 {
    let n = values.len();
    let c = ((q - x_min) / dx).clamp(0.0, (n - 1) as f64);
    let i = (c.floor() as usize).min(n - 2);
    let s = c - i as f64;
    let (ri, rj) = (values[i].norm_sqr(), values[i + 1].norm_sqr());
    let partial = dx * ((1.0 - s) * ri + 0.5 * (1.0 - s * s) * (rj - ri));
    let mut tail = 0.5 * rj;
    for v in &values[i + 2..] {
        tail += v.norm_sqr();
    }
    if i + 2 < n {
        tail -= 0.5 * values[n - 1].norm_sqr();
    } else {
        tail = 0.0;
    }
    partial + tail * dx
}

pub(crate) fn current_of(values: &[Complex64], x_min: f64, dx: f64, q: f64) -> f64 {
    let n = values.len();
    let c = (q - x_min) / dx;
    let i = c.round();
    if (c - i).abs() < 1e-9 && i >= 1.0 && (i as usize) + 1 < n {
        let i = i as usize;
        let d = (values[i + 1] - values[i - 1]) / (2.0 * dx);
        2.0 * (values[i].conj() * d).im
    } else {
        interp::density_and_current(values, x_min, dx, q).1
    }
}

/// Current on the link between nodes `i` and `i + 1` of the midpoint state
/// `(a + b) / 2`; zero on the links to the walls.
pub(crate) fn link_current(a: &[Complex64], b: &[Complex64], dx: f64, i: isize) -> f64 {
    if i < 0 || i as usize + 1 >= a.len() {
        return 0.0;
    }
    let i = i as usize;
    let (l, r) = ((a[i] + b[i]) * 0.5, (a[i + 1] + b[i + 1]) * 0.5);
    2.0 * (l.conj() * r).im / dx
}

/// Flux through the point at fraction `s` of a cell, given the link currents
/// to its left (`jm`), across it (`j0`) and to its right (`jp`). This is the
/// rate of change of [`right_mass_of`] under the lattice continuity equation.
pub(crate) fn cell_flux(jm: f64, j0: f64, jp: f64, s: f64) -> f64 {
    0.5 * (j0 + jp) - (1.0 - s) * (j0 - jm) - 0.5 * (1.0 - s * s) * ((jp - j0) - (j0 - jm))
}

/// Flux through `q` over one step from `a` to `b`, exactly consistent with the
/// change of the right-mass between the two states.
pub(crate) fn step_flux(a: &[Complex64], b: &[Complex64], x_min: f64, dx: f64, q: f64) -> f64 {
    let n = a.len();
    let c = ((q - x_min) / dx).clamp(0.0, (n - 1) as f64);
    let i = (c.floor() as usize).min(n - 2);
    let s = c - i as f64;
    let i = i as isize;
    cell_flux(link_current(a, b, dx, i - 1), link_current(a, b, dx, i), link_current(a, b, dx, i + 1), s)
}

/// Cumulative right-mass at every node, with linear density inside cells.
#[derive(Debug, Clone)]
pub struct RightMassProfile {
    x_min: f64,
    dx: f64,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RightMassProfile {
    pub fn new(density: &[f64], x_min: f64, dx: f64) -> Self {
        let n = density.len();
        let mut cumulative = vec![0.0; n];
        for i in (0..n - 1).rev() {
            cumulative[i] = cumulative[i + 1] + 0.5 * dx * (density[i] + density[i + 1]);
        }
        Self { x_min, dx, density: density.to_vec(), cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.density.len() - 1) as f64 * self.dx
    }

    pub fn at(&self, x: f64) -> f64 {
        let n = self.density.len();
        let c = ((x - self.x_min) / self.dx).clamp(0.0, (n - 1) as f64);
        let i = (c.floor() as usize).min(n - 2);
        let s = c - i as f64;
        let (ri, rj) = (self.density[i], self.density[i + 1]);
        self.cumulative[i + 1] + self.dx * ((1.0 - s) * ri + 0.5 * (1.0 - s * s) * (rj - ri))
    }

    /// Leftmost `x` with `at(x) <= mass`.
    pub fn position_of(&self, mass: f64) -> Result<f64> {
        if !mass.is_finite() {
            return Err(Error::Bisection);
        }
        if mass >= self.cumulative[0] {
            return Ok(self.x_min);
        }
        // first node whose cumulative mass has dropped to `mass` or below
        let i = self.cumulative.partition_point(|&m| m > mass);
        if i == 0 || i >= self.cumulative.len() {
            return Err(Error::Bisection);
        }
        let (mut lo, mut hi) = (self.x_min + (i - 1) as f64 * self.dx, self.x_min + i as f64 * self.dx);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.at(mid) > mass {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * self.dx {
                return Ok(hi);
            }
        }
        Err(Error::Bisection)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::packet::{gaussian_packet, GaussianPacketSpec};

    fn packet() -> WaveFunction {
        let grid = make_grid(-50.0, 50.0, 2001, 0.0, 0.01, 1).unwrap();
        gaussian_packet(&GaussianPacketSpec::new(0.0, 2.0, 1.5), &grid).unwrap()
    }

    #[test]
    fn right_mass_limits() {
        let wf = packet();
        assert!((wf.right_mass(-50.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(wf.right_mass(49.0).unwrap().abs() < 1e-8);
        assert!((wf.right_mass(0.0).unwrap() - 0.5).abs() < 1e-6);
        assert!(wf.right_mass(60.0).is_err());
    }

    #[test]
    fn right_mass_matches_profile() {
        let wf = packet();
        let profile = wf.right_mass_profile();
        for &q in &[-3.0, -1.234, 0.0, 0.77, 4.5] {
            assert!((profile.at(q) - wf.right_mass(q).unwrap()).abs() < 1e-13);
        }
        let x = profile.position_of(0.25).unwrap();
        assert!((profile.at(x) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn real_wave_has_no_current() {
        let mut wf = packet();
        wf.values_mut().iter_mut().for_each(|v| *v = Complex64::new(v.norm(), 0.0));
        for &q in &[-2.0, -0.33, 0.0, 1.0] {
            assert_eq!(wf.current_density(q).unwrap(), 0.0);
        }
    }

    #[test]
    fn plane_wave_current_is_group_velocity_times_density() {
        let wf = packet();
        for &q in &[-0.5, 0.0, 0.61] {
            let (psi, _) = wf.interpolate(q).unwrap();
            let j = wf.current_density(q).unwrap();
            // 2 k0 |psi|^2 with O(dx^2) finite-difference error
            assert!((j / psi.norm_sqr() - 3.0).abs() < 5e-3, "{q}: {}", j / psi.norm_sqr());
        }
    }
}
