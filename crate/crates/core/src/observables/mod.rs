//! Fluxes, transmission probability and dwell-time functionals.

pub mod dwell;
pub mod flux;
pub mod transmission;
pub mod units;

pub use dwell::{
    average_dwell_time, dwell_time_curves, flux_dwell_time, oriols_reflection_time, oriols_transmission_time,
    reflection_time, transmission_time, DwellCurves, DwellTimeReport, Method,
};
pub use flux::{cumulative_flux, current_density, right_mass, FluxSeries, ProbeSeries};
pub use transmission::{transmission_probability, TransmissionReadout};
pub use units::{unit_scales, UnitScales};
