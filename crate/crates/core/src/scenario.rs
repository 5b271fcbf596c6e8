//! A complete scattering set-up and the pipeline that evaluates it.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::SimulationGrid;
use crate::observables::dwell::{
    average_dwell_time, dwell_time_curves, flux_dwell_time, reflection_time, transmission_time, DwellCurves,
    DwellTimeReport, Method,
};
use crate::observables::flux::ProbeSeries;
use crate::observables::transmission::{
    transmission_probability, TransmissionReadout, READOUT_CROSS_CHECK, SETTLE_FLUX_LIMIT,
};
use crate::packet::{gaussian_packet_with_limit, GaussianPacketSpec, MAX_NEGATIVE_MOMENTUM_MASS};
use crate::potential::{double_barrier, PiecewisePotential};
use crate::propagate::{
    propagate_and_record, RecordOptions, RunRecord, SnapshotOptions, BOUNDARY_GUARD, GUARD_WIDTH, PROBE_CLEARANCE,
};
use crate::trajectories::ensemble::{ensemble_times, EnsembleOptions, EnsembleOutcome, Scheme, MAX_LOST_WEIGHT};
use crate::trajectories::field::{VelocityOptions, RHO_FLOOR_REL};
use crate::wavefunction::WaveFunction;

/// Speed cap for the guidance field, in units of the packet's group velocity.
pub const VELOCITY_CAP_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySettings {
    pub n: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub velocity_cap_factor: f64,
    pub rho_floor_rel: f64,
    pub max_lost_weight: f64,
}

impl Default for TrajectorySettings {
    fn default() -> Self {
        Self {
            n: 2000,
            scheme: Scheme::Quantile,
            seed: 0,
            velocity_cap_factor: VELOCITY_CAP_FACTOR,
            rho_floor_rel: RHO_FLOOR_REL,
            max_lost_weight: MAX_LOST_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub grid: SimulationGrid,
    pub potential: PiecewisePotential,
    pub packet: GaussianPacketSpec,
    /// Edges `(a, b)` of the dwell interval; both are flux probes.
    pub probes: (f64, f64),
    /// `(tau_i, tau_f)`
    pub window: (f64, f64),
    /// Length of the `|T|^2` settle window as a fraction of the run.
    pub settle_fraction: f64,
    pub settle_flux_limit: f64,
    pub readout_cross_check: f64,
    pub boundary_guard: f64,
    pub guard_width: usize,
    pub probe_clearance: f64,
    pub max_negative_momentum_mass: f64,
    /// Frames kept for trajectory integration.
    pub snapshots: SnapshotOptions,
    pub trajectories: TrajectorySettings,
}

impl Scenario {
    /// Double barrier `a' = -6, a = -3, b = 3, b' = 6, V1 = 2` hit by a packet with
    /// `k0 = 1.5`. Packet centre/width and all resolution settings are our own choice.
    pub fn double_barrier_default() -> Self {
        Self {
            grid: SimulationGrid::new(-1500.0, 1500.0, 75001, 0.0, 0.015, 20000).expect("valid default grid"),
            potential: double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).expect("valid default potential"),
            packet: GaussianPacketSpec::new(-35.0, 3.5, 1.5),
            probes: (-3.0, 3.0),
            window: (0.0, 60.0),
            settle_fraction: 0.1,
            settle_flux_limit: SETTLE_FLUX_LIMIT,
            readout_cross_check: READOUT_CROSS_CHECK,
            boundary_guard: BOUNDARY_GUARD,
            guard_width: GUARD_WIDTH,
            probe_clearance: PROBE_CLEARANCE,
            max_negative_momentum_mass: MAX_NEGATIVE_MOMENTUM_MASS,
            snapshots: SnapshotOptions { keep_every: 8, until: Some(60.0), x_range: Some((-300.0, 300.0)) },
            trajectories: TrajectorySettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.packet.validate(self.max_negative_momentum_mass)?;
        let (a, b) = self.probes;
        self.grid.check_contains(a)?;
        self.grid.check_contains(b)?;
        if a >= b {
            return Err(Error::InvalidArgument(format!("probe a = {a} must lie left of b = {b}")));
        }
        let (ti, tf) = self.window;
        let eps = 1e-9 * self.grid.dt();
        if !(ti <= tf && ti >= self.grid.t_start() - eps && tf <= self.grid.t_end() + eps) {
            return Err(Error::Coverage { from: ti, to: tf, start: self.grid.t_start(), end: self.grid.t_end() });
        }
        if !(self.settle_fraction > 0.0 && self.settle_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("settle_fraction {} outside (0, 1]", self.settle_fraction)));
        }
        if self.snapshots.keep_every == 0 {
            return Err(Error::InvalidArgument("keep_every must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.snapshots.x_range {
            if !(lo < hi && lo <= a && hi >= b) {
                return Err(Error::InvalidArgument(format!("snapshot range [{lo}, {hi}] must contain [{a}, {b}]")));
            }
        }
        if self.trajectories.n < 2 {
            return Err(Error::InvalidArgument("trajectory count must be at least 2".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        gaussian_packet_with_limit(&self.packet, &self.grid, self.max_negative_momentum_mass)
    }

    pub fn settle_window(&self) -> usize {
        ((self.settle_fraction * (self.grid.n_steps() + 1) as f64).round() as usize).max(1)
    }

    pub fn ensemble_options(&self) -> EnsembleOptions {
        let t = &self.trajectories;
        EnsembleOptions {
            n: t.n,
            scheme: t.scheme,
            seed: t.seed,
            velocity: self.velocity_options(),
            max_lost_weight: t.max_lost_weight,
        }
    }

    pub fn velocity_options(&self) -> VelocityOptions {
        VelocityOptions {
            rho_floor_rel: self.trajectories.rho_floor_rel,
            velocity_cap: self.trajectories.velocity_cap_factor * self.packet.group_velocity(),
        }
    }

    /// The same problem translated by `shift` (grid, potential, packet, probes, window ranges).
    pub fn shifted(&self, shift: f64) -> Self {
        let mut s = self.clone();
        s.grid = self.grid.shifted(shift);
        s.potential = self.potential.shifted(shift);
        s.packet = self.packet.shifted(shift);
        s.probes = (self.probes.0 + shift, self.probes.1 + shift);
        s.snapshots.x_range = self.snapshots.x_range.map(|(lo, hi)| (lo + shift, hi + shift));
        s
    }

    /// Propagate, record edge fluxes and read off `|T|^2`. Frames are kept only
    /// when `keep_history` is set; `density_stride` adds a coarse density movie.
    pub fn simulate(&self, keep_history: bool, density_stride: Option<(usize, usize)>) -> Result<Simulation> {
        self.validate()?;
        let wf0 = self.initial_state()?;
        let mut options = RecordOptions::new(vec![self.probes.0, self.probes.1]);
        options.guard = self.boundary_guard;
        options.guard_width = self.guard_width;
        options.probe_clearance = self.probe_clearance;
        options.density_stride = density_stride;
        if keep_history {
            options.snapshots = Some(self.snapshots);
        }
        let clock = Instant::now();
        let record = propagate_and_record(&wf0, &self.potential, &options)?;
        let propagation_seconds = clock.elapsed().as_secs_f64();
        Ok(Simulation { scenario: self.clone(), wf0, record, propagation_seconds })
    }
}

/// A propagated scenario with its recorded observables.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub wf0: WaveFunction,
    pub record: RunRecord,
    pub propagation_seconds: f64,
}

impl Simulation {
    pub fn edge_a(&self) -> &ProbeSeries {
        &self.record.flux.probes()[0]
    }

    pub fn edge_b(&self) -> &ProbeSeries {
        &self.record.flux.probes()[1]
    }

    pub fn times(&self) -> &[f64] {
        self.record.flux.times()
    }

    /// `|T|^2` from the flux at `b`, cross-checked against the final right-mass.
    pub fn transmission(&self) -> Result<TransmissionReadout> {
        let s = &self.scenario;
        let readout = transmission_probability(self.edge_b(), self.times(), s.settle_window(), s.settle_flux_limit)?;
        readout.cross_check(&self.record.final_state, s.probes.1, s.readout_cross_check)?;
        Ok(readout)
    }

    /// Transmission/reflection/dwell times on `window` from the edge fluxes.
    pub fn formula_report_on(&self, t2: f64, window: (f64, f64)) -> Result<DwellTimeReport> {
        let clock = Instant::now();
        let (fa, fb) = (&self.edge_a().f, &self.edge_b().f);
        let t = self.times();
        let tau_t = transmission_time(t, fa, fb, t2, window.0, window.1)?;
        let tau_r = reflection_time(t, fa, fb, t2, window.0, window.1)?;
        let tau_d = flux_dwell_time(t, fa, fb, window.0, window.1)?;
        let mut report = DwellTimeReport::new(tau_t, tau_r, tau_d, t2, 1.0 - t2, window, Method::Formula);
        report.wall_time = clock.elapsed().as_secs_f64();
        Ok(report)
    }

    /// Readout of `|T|^2` plus the flux-formula report on the scenario window;
    /// `wall_time` covers both.
    pub fn formula_report(&self) -> Result<(TransmissionReadout, DwellTimeReport)> {
        let clock = Instant::now();
        let readout = self.transmission()?;
        let mut report = self.formula_report_on(readout.t2, self.scenario.window)?;
        report.wall_time = clock.elapsed().as_secs_f64();
        Ok((readout, report))
    }

    /// Dwell time on the scenario window from stored densities.
    pub fn density_dwell_time(&self) -> Result<f64> {
        let history = self.history()?;
        let (a, b) = self.scenario.probes;
        average_dwell_time(history, a, b, self.scenario.window.0, self.scenario.window.1)
    }

    pub fn history(&self) -> Result<&crate::propagate::SnapshotHistory> {
        self.record
            .history
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("simulation was run without a snapshot history".into()))
    }

    /// Curves `s -> tau_X([tau_i, s])` at every flux sample of the window, thinned by `every`.
    pub fn curves(&self, t2: f64, every: usize, exec: Execution) -> Result<DwellCurves> {
        let (ti, tf) = self.scenario.window;
        let h = self.record.flux.dt();
        let s: Vec<f64> = self
            .times()
            .iter()
            .copied()
            .filter(|t| *t >= ti - 1e-9 * h && *t <= tf + 1e-9 * h)
            .step_by(every.max(1))
            .collect();
        dwell_time_curves(self.times(), &self.edge_a().f, &self.edge_b().f, t2, ti, &s, exec)
    }

    pub fn trajectory_report(&self, t2: f64, options: &EnsembleOptions, exec: Execution) -> Result<EnsembleOutcome> {
        let (a, b) = self.scenario.probes;
        let (ti, tf) = self.scenario.window;
        ensemble_times(self.history()?, &self.wf0, t2, a, b, ti, tf, options, exec)
    }
}
