//! Scenario files: TOML with fixed sections, every key optional and defaulting
//! to the shipped double-barrier scenario.

use std::path::{Path, PathBuf};

use dwelltime::observables::unit_scales;
use dwelltime::potential::{Closure, Segment};
use dwelltime::trajectories::Scheme;
use dwelltime::{double_barrier, GaussianPacketSpec, PiecewisePotential, Scenario, SimulationGrid, SnapshotOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The shipped scenario, also used when no `--config` is given.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/double_barrier.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub t_start: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Largest `|psi|` allowed on the outermost `guard_width` nodes.
    pub boundary_guard: f64,
    pub guard_width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    DoubleBarrier,
    Segments,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub left: f64,
    pub right: f64,
    pub height: f64,
    #[serde(default)]
    pub closure: Closure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub a_prime: f64,
    pub a: f64,
    pub b: f64,
    pub b_prime: f64,
    pub v1: f64,
    pub segments: Vec<SegmentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    pub x0: f64,
    pub sigma_x: f64,
    pub k0: f64,
    pub max_negative_momentum_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub tau_i: f64,
    pub tau_f: f64,
    /// Dwell interval `[a, b]`; both edges are flux probes.
    pub a: f64,
    pub b: f64,
    pub probe_clearance: f64,
    pub settle_fraction: f64,
    pub settle_flux_limit: f64,
    pub readout_cross_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub velocity_cap_factor: f64,
    pub rho_floor_rel: f64,
    pub max_lost_weight: f64,
    pub keep_every: usize,
    pub x_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub density_every_steps: usize,
    pub density_every_nodes: usize,
    pub curve_every: usize,
    /// Trajectories written by the `trajectories` command.
    pub paths: usize,
    pub path_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    pub v0_ev: f64,
    pub m_eff_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub packet: PacketConfig,
    pub window: WindowConfig,
    pub trajectories: TrajectoryConfig,
    pub output: OutputConfig,
    pub units: Option<UnitsConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = Scenario::double_barrier_default();
        let g = &s.grid;
        let t = &s.trajectories;
        Self {
            grid: GridConfig {
                x_min: g.x_min(),
                x_max: g.x_max(),
                n_points: g.n_points(),
                t_start: g.t_start(),
                dt: g.dt(),
                n_steps: g.n_steps(),
                boundary_guard: s.boundary_guard,
                guard_width: s.guard_width,
            },
            potential: PotentialConfig {
                kind: PotentialKind::DoubleBarrier,
                a_prime: -6.0,
                a: -3.0,
                b: 3.0,
                b_prime: 6.0,
                v1: 2.0,
                segments: Vec::new(),
            },
            packet: PacketConfig {
                x0: s.packet.x0,
                sigma_x: s.packet.sigma_x,
                k0: s.packet.k0,
                max_negative_momentum_mass: s.max_negative_momentum_mass,
            },
            window: WindowConfig {
                tau_i: s.window.0,
                tau_f: s.window.1,
                a: s.probes.0,
                b: s.probes.1,
                probe_clearance: s.probe_clearance,
                settle_fraction: s.settle_fraction,
                settle_flux_limit: s.settle_flux_limit,
                readout_cross_check: s.readout_cross_check,
            },
            trajectories: TrajectoryConfig {
                n: t.n,
                scheme: t.scheme,
                seed: t.seed,
                velocity_cap_factor: t.velocity_cap_factor,
                rho_floor_rel: t.rho_floor_rel,
                max_lost_weight: t.max_lost_weight,
                keep_every: s.snapshots.keep_every,
                x_range: s.snapshots.x_range.map(|(lo, hi)| [lo, hi]),
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                density_every_steps: 200,
                density_every_nodes: 25,
                curve_every: 1,
                paths: 50,
                path_every: 1,
            },
            units: None,
        }
    }
}

macro_rules! section_default {
    ($($ty:ident => $field:ident),*) => {
        $(impl Default for $ty {
            fn default() -> Self {
                ScenarioConfig::default().$field
            }
        })*
    };
}

section_default!(
    GridConfig => grid,
    PotentialConfig => potential,
    PacketConfig => packet,
    WindowConfig => window,
    TrajectoryConfig => trajectories,
    OutputConfig => output
);

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field =
                e.span().and_then(|span| field_at(text, span.start)).unwrap_or_else(|| "<document>".to_string());
            invalid(&field, message)
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| invalid("--config", format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
            }
            None => Self::parse(DEFAULT_SCENARIO),
        }
    }

    fn potential(&self) -> Result<PiecewisePotential, CliError> {
        let p = &self.potential;
        match p.kind {
            PotentialKind::Free => Ok(PiecewisePotential::zero()),
            PotentialKind::DoubleBarrier => {
                for (name, v) in [("a_prime", p.a_prime), ("a", p.a), ("b", p.b), ("b_prime", p.b_prime), ("v1", p.v1)]
                {
                    finite(&format!("potential.{name}"), v)?;
                }
                double_barrier(p.a_prime, p.a, p.b, p.b_prime, p.v1)
                    .map_err(|e| invalid("potential.a_prime/a/b/b_prime", e.to_string()))
            }
            PotentialKind::Segments => {
                let segments = p.segments.iter().map(|s| Segment {
                    left: s.left,
                    right: s.right,
                    height: s.height,
                    closure: s.closure,
                });
                PiecewisePotential::new(segments.collect()).map_err(|e| invalid("potential.segments", e.to_string()))
            }
        }
    }

    /// Build the scenario, checking every precondition that can be checked
    /// without propagating, and naming the offending key.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let g = &self.grid;
        for (name, v) in [("grid.x_min", g.x_min), ("grid.x_max", g.x_max), ("grid.t_start", g.t_start)] {
            finite(name, v)?;
        }
        positive("grid.dt", g.dt)?;
        positive("grid.boundary_guard", g.boundary_guard)?;
        if g.x_min >= g.x_max {
            return Err(invalid("grid.x_min", format!("{} is not below grid.x_max = {}", g.x_min, g.x_max)));
        }
        if g.guard_width == 0 || 2 * g.guard_width >= g.n_points {
            return Err(invalid("grid.guard_width", format!("{} does not fit {} nodes", g.guard_width, g.n_points)));
        }
        let grid = SimulationGrid::new(g.x_min, g.x_max, g.n_points, g.t_start, g.dt, g.n_steps)
            .map_err(|e| invalid("grid.n_points", e.to_string()))?;

        let p = &self.packet;
        finite("packet.x0", p.x0)?;
        positive("packet.sigma_x", p.sigma_x)?;
        finite("packet.k0", p.k0)?;
        positive("packet.max_negative_momentum_mass", p.max_negative_momentum_mass)?;
        let packet = GaussianPacketSpec::new(p.x0, p.sigma_x, p.k0);
        packet.validate(p.max_negative_momentum_mass).map_err(|e| invalid("packet.sigma_x/k0", e.to_string()))?;

        let w = &self.window;
        for (name, v) in [("window.tau_i", w.tau_i), ("window.tau_f", w.tau_f), ("window.a", w.a), ("window.b", w.b)] {
            finite(name, v)?;
        }
        if w.a >= w.b {
            return Err(invalid("window.a", format!("{} is not left of window.b = {}", w.a, w.b)));
        }
        for (name, q) in [("window.a", w.a), ("window.b", w.b)] {
            if !grid.contains(q) {
                return Err(invalid(name, format!("{q} lies outside [{}, {}]", grid.x_min(), grid.x_max())));
            }
        }
        if w.tau_i > w.tau_f {
            return Err(invalid("window.tau_i", format!("{} exceeds window.tau_f = {}", w.tau_i, w.tau_f)));
        }
        let eps = 1e-9 * grid.dt();
        if w.tau_i < grid.t_start() - eps || w.tau_f > grid.t_end() + eps {
            return Err(invalid(
                "window.tau_f",
                format!("[{}, {}] is not inside the run [{}, {}]", w.tau_i, w.tau_f, grid.t_start(), grid.t_end()),
            ));
        }
        positive("window.probe_clearance", w.probe_clearance)?;
        positive("window.settle_flux_limit", w.settle_flux_limit)?;
        positive("window.readout_cross_check", w.readout_cross_check)?;
        if !(w.settle_fraction > 0.0 && w.settle_fraction <= 1.0) {
            return Err(invalid("window.settle_fraction", format!("{} is outside (0, 1]", w.settle_fraction)));
        }

        let t = &self.trajectories;
        if t.n < 2 {
            return Err(invalid("trajectories.n", format!("{} is below 2", t.n)));
        }
        if t.keep_every == 0 {
            return Err(invalid("trajectories.keep_every", "must be at least 1"));
        }
        positive("trajectories.velocity_cap_factor", t.velocity_cap_factor)?;
        positive("trajectories.rho_floor_rel", t.rho_floor_rel)?;
        if !(0.0..=1.0).contains(&t.max_lost_weight) {
            return Err(invalid("trajectories.max_lost_weight", format!("{} is outside [0, 1]", t.max_lost_weight)));
        }
        if let Some([lo, hi]) = t.x_range {
            if !(lo < hi && lo <= w.a && hi >= w.b) {
                return Err(invalid("trajectories.x_range", format!("[{lo}, {hi}] must contain [{}, {}]", w.a, w.b)));
            }
        }

        let o = &self.output;
        for (name, v) in [
            ("output.density_every_steps", o.density_every_steps),
            ("output.density_every_nodes", o.density_every_nodes),
            ("output.curve_every", o.curve_every),
            ("output.path_every", o.path_every),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        if o.paths < 2 {
            return Err(invalid("output.paths", format!("{} is below 2", o.paths)));
        }
        if let Some(u) = self.units {
            unit_scales(u.v0_ev, u.m_eff_ratio).map_err(|e| invalid("units", e.to_string()))?;
        }

        let mut scenario = Scenario::double_barrier_default();
        scenario.grid = grid;
        scenario.potential = self.potential()?;
        scenario.packet = packet;
        scenario.probes = (w.a, w.b);
        scenario.window = (w.tau_i, w.tau_f);
        scenario.settle_fraction = w.settle_fraction;
        scenario.settle_flux_limit = w.settle_flux_limit;
        scenario.readout_cross_check = w.readout_cross_check;
        scenario.boundary_guard = g.boundary_guard;
        scenario.guard_width = g.guard_width;
        scenario.probe_clearance = w.probe_clearance;
        scenario.max_negative_momentum_mass = p.max_negative_momentum_mass;
        scenario.snapshots = SnapshotOptions {
            keep_every: t.keep_every,
            until: Some(w.tau_f),
            x_range: t.x_range.map(|[lo, hi]| (lo, hi)),
        };
        scenario.trajectories.n = t.n;
        scenario.trajectories.scheme = t.scheme;
        scenario.trajectories.seed = t.seed;
        scenario.trajectories.velocity_cap_factor = t.velocity_cap_factor;
        scenario.trajectories.rho_floor_rel = t.rho_floor_rel;
        scenario.trajectories.max_lost_weight = t.max_lost_weight;
        scenario.validate().map_err(|e| invalid("<scenario>", e.to_string()))?;

        let wf0 = scenario.initial_state().map_err(|e| invalid("packet", e.to_string()))?;
        for (name, q) in [("window.a", w.a), ("window.b", w.b)] {
            let mass = wf0.right_mass(q).map_err(|e| invalid(name, e.to_string()))?;
            if mass >= w.probe_clearance {
                return Err(invalid(
                    name,
                    format!(
                        "initial packet has right-mass {mass:.3e} beyond the probe (limit {:.1e})",
                        w.probe_clearance
                    ),
                ));
            }
        }
        Ok(scenario)
    }
}

/// Dotted key path of the table entry enclosing byte `offset`.
fn field_at(text: &str, offset: usize) -> Option<String> {
    let before = &text[..offset.min(text.len())];
    let section = before
        .lines()
        .filter_map(|l| {
            let l = l.trim();
            (l.starts_with('[') && l.ends_with(']')).then(|| l.trim_matches(|c| c == '[' || c == ']').to_string())
        })
        .next_back();
    let line = text[before.rfind('\n').map_or(0, |i| i + 1)..].lines().next()?.trim();
    let key = line.split('=').next().map(str::trim).filter(|k| !k.is_empty() && !k.starts_with('['));
    match (section, key) {
        (Some(s), Some(k)) => Some(format!("{s}.{k}")),
        (Some(s), None) => Some(s),
        (None, Some(k)) => Some(k.to_string()),
        (None, None) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_equals_builtin_defaults() {
        let shipped = ScenarioConfig::parse(DEFAULT_SCENARIO).unwrap();
        let builtin = ScenarioConfig { units: shipped.units, ..ScenarioConfig::default() };
        assert_eq!(shipped, builtin);
        assert_eq!(shipped.to_scenario().unwrap(), Scenario::double_barrier_default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let err = ScenarioConfig::parse("[grid]\nn_point = 10\n").unwrap_err();
        match err {
            CliError::Config { field, message } => {
                assert_eq!(field, "grid.n_point");
                assert!(message.contains("n_point"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let cases = [
            ("[grid]\ndt = -1.0\n", "grid.dt"),
            ("[window]\na = 4.0\nb = 3.0\n", "window.a"),
            ("[window]\ntau_f = 1e6\n", "window.tau_f"),
            ("[packet]\nsigma_x = 0.3\n", "packet.sigma_x/k0"),
            ("[packet]\nx0 = -10.0\n", "window.a"),
            ("[trajectories]\nn = 1\n", "trajectories.n"),
            ("[units]\nv0_ev = -1.0\nm_eff_ratio = 0.07\n", "units"),
        ];
        for (text, expected) in cases {
            let err = ScenarioConfig::parse(text).and_then(|c| c.to_scenario()).unwrap_err();
            match err {
                CliError::Config { field, .. } => assert_eq!(field, expected, "{text}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn segment_lists_parse() {
        let text = "[potential]\nkind = \"segments\"\nsegments = [{ left = -1.0, right = 1.0, height = 1.5 }, \
                    { left = 1.0, right = 2.0, height = 0.5, closure = \"right_closed\" }]\n";
        let s = ScenarioConfig::parse(text).unwrap().to_scenario().unwrap();
        assert_eq!(s.potential.eval(1.0), 1.5);
        assert_eq!(s.potential.eval(1.5), 0.5);
    }
}
