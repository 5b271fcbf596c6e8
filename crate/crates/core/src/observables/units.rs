use serde::Serialize;

use crate::error::{Error, Result};

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
/// `hbar c` in eV Angstrom.
pub const HBAR_C_EV_ANGSTROM: f64 = 1_973.269_804;
/// Electron rest energy in eV.
pub const ELECTRON_MASS_EV: f64 = 510_998.950_00;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitScales {
    /// `hbar / (2 V0)` in femtoseconds
    pub t_unit_fs: f64,
    /// `hbar / sqrt(2 m V0)` in Angstrom
    pub x_unit_angstrom: f64,
}

pub fn unit_scales(v0_ev: f64, m_eff_ratio: f64) -> Result<UnitScales> {
    if !(v0_ev > 0.0 && v0_ev.is_finite() && m_eff_ratio > 0.0 && m_eff_ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "unit scales need positive V0 and mass ratio, got {v0_ev}, {m_eff_ratio}"
        )));
    }
    let t_unit_fs = HBAR_EV_S / (2.0 * v0_ev) * 1e15;
    let x_unit_angstrom = HBAR_C_EV_ANGSTROM / (2.0 * m_eff_ratio * ELECTRON_MASS_EV * v0_ev).sqrt();
    Ok(UnitScales { t_unit_fs, x_unit_angstrom })
}
