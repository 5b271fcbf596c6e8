//! Gaussian initial states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::wavefunction::WaveFunction;

/// Largest admissible probability on negative wavenumbers.
pub const MAX_NEGATIVE_MOMENTUM_MASS: f64 = 1e-8;

/// Half-width of the packet support, in units of `sigma_x`, that must fit on the grid.
pub const SUPPORT_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacketSpec {
    pub x0: f64,
    pub sigma_x: f64,
    pub k0: f64,
}

impl GaussianPacketSpec {
    pub fn new(x0: f64, sigma_x: f64, k0: f64) -> Self {
        Self { x0, sigma_x, k0 }
    }

    /// Standard deviation of `|phi(k)|^2`.
    pub fn sigma_k(&self) -> f64 {
        0.5 / self.sigma_x
    }

    /// Probability carried by `k < 0`, i.e. `Phi(-k0/sigma_k)`.
    pub fn negative_momentum_mass(&self) -> f64 {
        0.5 * erfc(self.k0 / (self.sigma_k() * std::f64::consts::SQRT_2))
    }

    /// Group velocity `2 k0` in reduced units.
    pub fn group_velocity(&self) -> f64 {
        2.0 * self.k0
    }

    pub fn validate(&self, max_negative_mass: f64) -> Result<()> {
        if !(self.x0.is_finite() && self.sigma_x.is_finite() && self.k0.is_finite()) {
            return Err(Error::InvalidPacket("non-finite parameter".into()));
        }
        if self.sigma_x <= 0.0 {
            return Err(Error::InvalidPacket(format!("sigma_x {} must be positive", self.sigma_x)));
        }
        if self.k0 <= 0.0 {
            return Err(Error::InvalidPacket(format!("k0 {} must be positive", self.k0)));
        }
        let mass = self.negative_momentum_mass();
        if mass >= max_negative_mass {
            return Err(Error::NegativeMomentum { mass, limit: max_negative_mass });
        }
        Ok(())
    }

    pub fn shifted(&self, shift: f64) -> Self {
        Self { x0: self.x0 + shift, ..*self }
    }
}

/// `exp(-(x-x0)^2/(4 sigma_x^2) + i k0 x)`, trapezoid-normalized on `grid`.
pub fn gaussian_packet(spec: &GaussianPacketSpec, grid: &SimulationGrid) -> Result<WaveFunction> {
    gaussian_packet_with_limit(spec, grid, MAX_NEGATIVE_MOMENTUM_MASS)
}

pub fn gaussian_packet_with_limit(
    spec: &GaussianPacketSpec,
    grid: &SimulationGrid,
    max_negative_mass: f64,
) -> Result<WaveFunction> {
    spec.validate(max_negative_mass)?;
    let half = SUPPORT_SIGMAS * spec.sigma_x;
    if spec.x0 - half < grid.x_min() || spec.x0 + half > grid.x_max() {
        return Err(Error::InvalidPacket(format!(
            "support [{}, {}] does not fit in [{}, {}]",
            spec.x0 - half,
            spec.x0 + half,
            grid.x_min(),
            grid.x_max()
        )));
    }
    let values = grid
        .positions()
        .map(|x| {
            let u = x - spec.x0;
            Complex64::from_polar((-u * u / (4.0 * spec.sigma_x * spec.sigma_x)).exp(), spec.k0 * x)
        })
        .collect();
    let mut wf = WaveFunction::new(*grid, grid.t_start(), values);
    wf.normalize();
    Ok(wf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid() -> SimulationGrid {
        make_grid(-100.0, 100.0, 4096, 0.0, 0.01, 10).unwrap()
    }

    #[test]
    fn normalized_with_mean_wavenumber() {
        let wf = gaussian_packet(&GaussianPacketSpec::new(-15.0, 2.5, 1.5), &grid()).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-10);
        assert!((wf.mean_wavenumber() - 1.5).abs() < 1e-6);
        assert!((wf.mean_position() + 15.0).abs() < 1e-8);
        assert!((wf.position_spread() - 2.5).abs() < 1e-6);
    }

    #[test]
    fn narrow_packet_rejected_with_mass() {
        let err = gaussian_packet(&GaussianPacketSpec::new(-15.0, 0.3, 1.5), &grid()).unwrap_err();
        match err {
            Error::NegativeMomentum { mass, .. } => assert!((mass - 0.1840).abs() < 1e-3, "{mass}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn support_must_fit() {
        assert!(gaussian_packet(&GaussianPacketSpec::new(-90.0, 2.5, 1.5), &grid()).is_err());
        assert!(gaussian_packet(&GaussianPacketSpec::new(0.0, -1.0, 1.5), &grid()).is_err());
        assert!(gaussian_packet(&GaussianPacketSpec::new(0.0, 1.0, -1.5), &grid()).is_err());
    }
}
