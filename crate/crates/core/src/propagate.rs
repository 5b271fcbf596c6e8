//! Crank–Nicolson propagation of `i d_t psi = (-d_x^2 + V) psi` and run recording.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::observables::flux::FluxSeries;
use crate::potential::PiecewisePotential;
use crate::wavefunction::{link_current, right_mass_of, step_flux, trapezoid, WaveFunction};

/// Default guard on `|psi|` near the walls.
pub const BOUNDARY_GUARD: f64 = 1e-6;
/// Nodes on each side inspected by the guard.
pub const GUARD_WIDTH: usize = 8;
/// Largest right-mass a probe may see at the first sample.
pub const PROBE_CLEARANCE: f64 = 1e-6;

/// Factored `(1 + i dt/2 H) psi' = (1 - i dt/2 H) psi` for a fixed grid and potential.
///
/// Nodes outside the grid are held at zero (hard walls one spacing beyond
/// `x_min` and `x_max`).
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dt: f64,
    /// `1 - i dt/2 (2/dx^2 + V_i)`
    rhs_diag: Vec<Complex64>,
    /// `i dt/2 * (-1/dx^2)`, the constant off-diagonal of the implicit side
    off: Complex64,
    inv_pivot: Vec<Complex64>,
    upper: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(grid: &SimulationGrid, potential: &PiecewisePotential) -> Result<Self> {
        Self::from_samples(grid.dx(), grid.dt(), &potential.sample(grid))
    }

    pub fn from_samples(dx: f64, dt: f64, potential: &[f64]) -> Result<Self> {
        let n = potential.len();
        let half = Complex64::new(0.0, 0.5 * dt);
        let kinetic = 2.0 / (dx * dx);
        let off = half * (-1.0 / (dx * dx));
        let lhs_diag: Vec<Complex64> =
            potential.iter().map(|v| Complex64::new(1.0, 0.0) + half * (kinetic + v)).collect();
        let rhs_diag = potential.iter().map(|v| Complex64::new(1.0, 0.0) - half * (kinetic + v)).collect();

        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut upper = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_upper = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let pivot = lhs_diag[i] - off * prev_upper;
            if !pivot.is_finite() || pivot.norm() <= 1e-300 {
                return Err(Error::TridiagonalSolve { row: i, pivot: pivot.norm() });
            }
            inv_pivot[i] = pivot.inv();
            upper[i] = off * inv_pivot[i];
            prev_upper = upper[i];
        }
        Ok(Self { dt, rhs_diag, off, inv_pivot, upper, scratch: vec![Complex64::new(0.0, 0.0); n] })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance raw amplitudes by one step in place.
    pub fn advance(&mut self, psi: &mut [Complex64]) {
        let n = psi.len();
        assert_eq!(n, self.rhs_diag.len());
        let y = &mut self.scratch;
        let off = self.off;
        // forward sweep on the explicit right-hand side
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let left = if i > 0 { psi[i - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::new(0.0, 0.0) };
            let r = self.rhs_diag[i] * psi[i] - off * (left + right);
            prev = flush((r - off * prev) * self.inv_pivot[i]);
            y[i] = prev;
        }
        psi[n - 1] = y[n - 1];
        for i in (0..n - 1).rev() {
            psi[i] = flush(y[i] - self.upper[i] * psi[i + 1]);
        }
    }

    pub fn step(&mut self, wf: &mut WaveFunction) {
        let t = wf.t() + self.dt;
        self.advance(wf.values_mut());
        wf.set_t(t);
    }
}

/// One Crank–Nicolson step of size `grid.dt()`.
pub fn step(wf: &WaveFunction, potential: &PiecewisePotential) -> Result<WaveFunction> {
    let mut cn = CrankNicolson::new(wf.grid(), potential)?;
    let mut next = wf.clone();
    cn.step(&mut next);
    Ok(next)
}

/// Zero subnormal parts.
#[inline]
fn flush(v: Complex64) -> Complex64 {
    let f = |x: f64| if x.abs() < f64::MIN_POSITIVE { 0.0 } else { x };
    Complex64::new(f(v.re), f(v.im))
}

/// Which wave-function frames to keep for trajectory integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotOptions {
    pub keep_every: usize,
    /// Last time (inclusive) to store; `None` keeps the whole run.
    pub until: Option<f64>,
    /// Spatial crop; `None` keeps the whole grid.
    pub x_range: Option<(f64, f64)>,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        Self { keep_every: 1, until: None, x_range: None }
    }
}

/// Stored frames on a uniform time lattice and a (possibly cropped) space lattice.
#[derive(Debug, Clone)]
pub struct SnapshotHistory {
    x_min: f64,
    dx: f64,
    times: Vec<f64>,
    frames: Vec<Vec<Complex64>>,
    peaks: Vec<f64>,
    /// Link currents averaged over each interval between consecutive frames.
    links: Vec<Vec<f64>>,
    /// Right-mass of the full lattice at the right crop edge.
    beyond: Vec<f64>,
}

impl SnapshotHistory {
    fn new(x_min: f64, dx: f64) -> Self {
        Self {
            x_min,
            dx,
            times: Vec::new(),
            frames: Vec::new(),
            peaks: Vec::new(),
            links: Vec::new(),
            beyond: Vec::new(),
        }
    }

    /// History built from full wave functions on one grid, taken as consecutive
    /// Crank-Nicolson states: interval link currents come from the midpoints.
    pub fn from_wavefunctions(wfs: &[WaveFunction]) -> Self {
        let grid = wfs[0].grid();
        let mut h = Self::new(grid.x_min(), grid.dx());
        for (k, wf) in wfs.iter().enumerate() {
            if k > 0 {
                let (a, b) = (wfs[k - 1].values(), wf.values());
                h.links.push((0..a.len() as isize - 1).map(|i| link_current(a, b, grid.dx(), i)).collect());
            }
            h.push(wf.t(), wf.values().to_vec(), 0.0);
        }
        h
    }

    fn push(&mut self, t: f64, frame: Vec<Complex64>, beyond: f64) {
        let peak = frame.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        self.times.push(t);
        self.beyond.push(beyond);
        self.frames.push(frame);
        self.peaks.push(peak);
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.n_points() - 1) as f64 * self.dx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_points(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, k: usize) -> &[Complex64] {
        &self.frames[k]
    }

    pub fn peak_density(&self, k: usize) -> f64 {
        self.peaks[k]
    }

    /// Link currents `J_{i+1/2}`, `i = 0..n_points - 1`, averaged over `[t_k, t_{k+1}]`.
    pub fn link_currents(&self, k: usize) -> &[f64] {
        &self.links[k]
    }

    /// Spacing between stored frames.
    pub fn interval(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Index of the stored frame at time `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let h = self.interval();
        if self.times.is_empty() {
            return None;
        }
        if h == 0.0 {
            return ((t - self.times[0]).abs() < 1e-12).then_some(0);
        }
        let c = (t - self.times[0]) / h;
        let k = c.round();
        ((c - k).abs() < 1e-6 && k >= 0.0 && (k as usize) < self.times.len()).then_some(k as usize)
    }

    /// Right-mass of the full lattice, including what lies beyond the crop.
    pub fn right_mass(&self, k: usize, q: f64) -> f64 {
        right_mass_of(&self.frames[k], self.x_min, self.dx, q) + self.beyond[k]
    }

    /// `int_a^b |psi|^2` on frame `k`.
    pub fn interval_mass(&self, k: usize, a: f64, b: f64) -> f64 {
        self.right_mass(k, a) - self.right_mass(k, b)
    }

    pub fn norm(&self, k: usize) -> f64 {
        let rho: Vec<f64> = self.frames[k].iter().map(|v| v.norm_sqr()).collect();
        trapezoid(&rho, self.dx)
    }

    pub fn storage_bytes(&self) -> usize {
        self.frames.iter().map(|f| f.len() * std::mem::size_of::<Complex64>()).sum::<usize>()
            + self.links.iter().map(|l| l.len() * std::mem::size_of::<f64>()).sum::<usize>()
            + 3 * self.times.len() * std::mem::size_of::<f64>()
    }
}

/// Downsampled density field for plotting.
#[derive(Debug, Clone, Default)]
pub struct DensityMovie {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RecordOptions {
    pub probes: Vec<f64>,
    pub snapshots: Option<SnapshotOptions>,
    /// `(every_steps, every_nodes)` for the density movie.
    pub density_stride: Option<(usize, usize)>,
    pub guard: f64,
    pub guard_width: usize,
    pub probe_clearance: f64,
}

impl RecordOptions {
    pub fn new(probes: Vec<f64>) -> Self {
        Self {
            probes,
            snapshots: None,
            density_stride: None,
            guard: BOUNDARY_GUARD,
            guard_width: GUARD_WIDTH,
            probe_clearance: PROBE_CLEARANCE,
        }
    }

    pub fn with_snapshots(mut self, snapshots: SnapshotOptions) -> Self {
        self.snapshots = Some(snapshots);
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub flux: FluxSeries,
    pub history: Option<SnapshotHistory>,
    pub movie: Option<DensityMovie>,
    pub final_state: WaveFunction,
    /// Largest `|norm(t) - norm(t_start)|` seen over the run.
    pub max_norm_drift: f64,
}

struct Cropper {
    lo: usize,
    hi: usize,
    keep_every: usize,
    until: f64,
}

/// Run `grid.n_steps()` steps from `wf0`, sampling current and right-mass at
/// every probe after each step and keeping frames as requested.
pub fn propagate_and_record(
    wf0: &WaveFunction,
    potential: &PiecewisePotential,
    options: &RecordOptions,
) -> Result<RunRecord> {
    let grid = *wf0.grid();
    for &q in &options.probes {
        grid.check_contains(q)?;
        let mass = wf0.right_mass(q)?;
        if mass >= options.probe_clearance {
            return Err(Error::ProbeNotClear { q, mass });
        }
    }
    let mut cn = CrankNicolson::new(&grid, potential)?;
    let n_steps = grid.n_steps();
    let (x_min, dx) = (grid.x_min(), grid.dx());

    let cropper = match options.snapshots {
        Some(s) => {
            if s.keep_every == 0 {
                return Err(Error::InvalidArgument("keep_every must be at least 1".into()));
            }
            let (lo, hi) = match s.x_range {
                Some((a, b)) => {
                    if a >= b {
                        return Err(Error::InvalidArgument(format!("snapshot range [{a}, {b}] is empty")));
                    }
                    let lo = grid.coordinate(a.max(grid.x_min())).floor() as usize;
                    let hi = (grid.coordinate(b.min(grid.x_max())).ceil() as usize).min(grid.n_points() - 1);
                    (lo, hi)
                }
                None => (0, grid.n_points() - 1),
            };
            if hi - lo + 1 < 4 {
                return Err(Error::InvalidArgument("snapshot range narrower than 4 nodes".into()));
            }
            Some(Cropper { lo, hi, keep_every: s.keep_every, until: s.until.unwrap_or(f64::INFINITY) })
        }
        None => None,
    };
    let mut history = cropper.as_ref().map(|c| SnapshotHistory::new(grid.x(c.lo), dx));
    let mut movie = options.density_stride.map(|(_, every_nodes)| DensityMovie {
        xs: (0..grid.n_points()).step_by(every_nodes.max(1)).map(|i| grid.x(i)).collect(),
        ..Default::default()
    });

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut step_fluxes: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps); options.probes.len()];
    let mut masses: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); options.probes.len()];

    let mut wf = wf0.clone();
    let mut prev = wf.values().to_vec();
    let norm0 = wf.norm();
    let mut max_norm_drift = 0.0_f64;
    let mut link_sum: Vec<f64> = Vec::new();
    let mut link_steps = 0usize;
    for k in 0..=n_steps {
        if k > 0 {
            prev.copy_from_slice(wf.values());
            cn.step(&mut wf);
            // keep t on the lattice instead of accumulating round-off
            wf.set_t(grid.t(k));
            max_norm_drift = max_norm_drift.max((wf.norm() - norm0).abs());
            for (p, &q) in options.probes.iter().enumerate() {
                step_fluxes[p].push(step_flux(&prev, wf.values(), x_min, dx, q));
            }
            if let (Some(c), Some(h)) = (&cropper, history.as_ref()) {
                if grid.t(k - 1) < c.until && !h.is_empty() {
                    if link_sum.is_empty() {
                        link_sum = vec![0.0; c.hi - c.lo];
                    }
                    for (i, acc) in link_sum.iter_mut().enumerate() {
                        *acc += link_current(&prev, wf.values(), dx, (c.lo + i) as isize);
                    }
                    link_steps += 1;
                }
            }
        }
        let t = wf.t();
        let amplitude = wf.boundary_amplitude(options.guard_width);
        if amplitude > options.guard {
            return Err(Error::BoundaryGuard { t, amplitude, limit: options.guard });
        }
        times.push(t);
        for (p, &q) in options.probes.iter().enumerate() {
            masses[p].push(right_mass_of(wf.values(), x_min, dx, q));
        }
        if let (Some(c), Some(h)) = (&cropper, history.as_mut()) {
            if k % c.keep_every == 0 && t <= c.until + 1e-9 * grid.dt() {
                if k > 0 {
                    let scale = 1.0 / link_steps as f64;
                    h.links.push(link_sum.iter().map(|v| v * scale).collect());
                    link_sum.iter_mut().for_each(|v| *v = 0.0);
                    link_steps = 0;
                }
                h.push(t, wf.values()[c.lo..=c.hi].to_vec(), right_mass_of(wf.values(), x_min, dx, grid.x(c.hi)));
            }
        }
        if let (Some((every_steps, every_nodes)), Some(m)) = (options.density_stride, movie.as_mut()) {
            if k % every_steps.max(1) == 0 {
                m.times.push(t);
                m.rows.push(wf.values().iter().step_by(every_nodes.max(1)).map(|v| v.norm_sqr()).collect());
            }
        }
    }
    if let Some(h) = history.as_mut() {
        h.links.truncate(h.frames.len().saturating_sub(1));
    }

    // current at t_k: mean of the step fluxes on either side, so that the
    // trapezoid of j reproduces the lattice's own mass transfer
    let currents: Vec<Vec<f64>> = step_fluxes
        .iter()
        .zip(&options.probes)
        .map(|(sf, &q)| {
            if sf.is_empty() {
                return vec![crate::wavefunction::current_of(wf.values(), x_min, dx, q)];
            }
            (0..=n_steps)
                .map(|k| match k {
                    0 => sf[0],
                    k if k == n_steps => sf[k - 1],
                    k => 0.5 * (sf[k - 1] + sf[k]),
                })
                .collect()
        })
        .collect();

    let flux = FluxSeries::from_samples(
        times,
        options.probes.iter().copied().zip(currents).zip(masses).map(|((q, j), m)| (q, j, m)).collect(),
    )?;
    Ok(RunRecord { flux, history, movie, final_state: wf, max_norm_drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::packet::{gaussian_packet, GaussianPacketSpec};
    use crate::potential::double_barrier;

    #[test]
    fn norm_and_energy_conserved() {
        let grid = make_grid(-60.0, 60.0, 2401, 0.0, 0.02, 500).unwrap();
        let v = double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).unwrap();
        let samples = v.sample(&grid);
        let mut wf = gaussian_packet(&GaussianPacketSpec::new(-20.0, 3.0, 1.5), &grid).unwrap();
        let mut cn = CrankNicolson::new(&grid, &v).unwrap();
        let (n0, e0) = (wf.norm(), wf.energy(&samples));
        for _ in 0..500 {
            let before = wf.norm();
            cn.step(&mut wf);
            assert!((wf.norm() - before).abs() < 1e-12);
        }
        assert!((wf.norm() - n0).abs() < 1e-10);
        assert!(((wf.energy(&samples) - e0) / e0).abs() < 1e-10);
        assert!((wf.t() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn linear() {
        let grid = make_grid(-30.0, 30.0, 601, 0.0, 0.05, 1).unwrap();
        let v = double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).unwrap();
        let a = gaussian_packet(&GaussianPacketSpec::new(-10.0, 2.0, 1.5), &grid).unwrap();
        let b = gaussian_packet(&GaussianPacketSpec::new(8.0, 1.5, 2.5), &grid).unwrap();
        let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(-0.7, 0.4));
        let combo: Vec<_> = a.values().iter().zip(b.values()).map(|(x, y)| alpha * x + beta * y).collect();
        let combo = step(&WaveFunction::new(grid, 0.0, combo), &v).unwrap();
        let (sa, sb) = (step(&a, &v).unwrap(), step(&b, &v).unwrap());
        for i in 0..grid.n_points() {
            let expect = alpha * sa.values()[i] + beta * sb.values()[i];
            assert!((combo.values()[i] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn snapshot_bookkeeping() {
        let grid = make_grid(-40.0, 40.0, 801, 0.0, 0.05, 40).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(-15.0, 2.0, 1.5), &grid).unwrap();
        let opts = RecordOptions::new(vec![0.0]).with_snapshots(SnapshotOptions::default());
        let rec = propagate_and_record(&wf, &PiecewisePotential::zero(), &opts).unwrap();
        assert_eq!(rec.history.as_ref().unwrap().len(), 41);
        assert_eq!(rec.flux.times().len(), 41);

        let opts = RecordOptions::new(vec![0.0]).with_snapshots(SnapshotOptions {
            keep_every: 4,
            until: Some(1.0),
            x_range: Some((-20.0, 10.0)),
        });
        let rec = propagate_and_record(&wf, &PiecewisePotential::zero(), &opts).unwrap();
        let h = rec.history.unwrap();
        assert_eq!(h.len(), 6);
        assert!((h.interval() - 0.2).abs() < 1e-12);
        assert!((h.x_min() + 20.0).abs() < 1e-12 && (h.x_max() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn cropped_history_keeps_full_right_mass() {
        let grid = make_grid(-40.0, 40.0, 801, 0.0, 0.05, 40).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(-15.0, 2.0, 1.5), &grid).unwrap();
        let opts = RecordOptions::new(vec![0.0]).with_snapshots(SnapshotOptions {
            keep_every: 8,
            until: None,
            x_range: Some((-25.0, -10.0)),
        });
        let rec = propagate_and_record(&wf, &PiecewisePotential::zero(), &opts).unwrap();
        let h = rec.history.unwrap();
        let k = h.len() - 1;
        for q in [-22.0, -14.3, -10.0] {
            let full = rec.final_state.right_mass(q).unwrap();
            assert!(full > 0.5);
            assert!((h.right_mass(k, q) - full).abs() < 1e-14, "{q}");
        }
    }

    #[test]
    fn guard_trips_when_packet_hits_wall() {
        let grid = make_grid(-30.0, 30.0, 601, 0.0, 0.05, 400).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(-10.0, 2.0, 1.5), &grid).unwrap();
        let err = propagate_and_record(&wf, &PiecewisePotential::zero(), &RecordOptions::new(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::BoundaryGuard { .. }), "{err}");
    }

    #[test]
    fn probe_must_start_clear() {
        let grid = make_grid(-30.0, 30.0, 601, 0.0, 0.05, 4).unwrap();
        let wf = gaussian_packet(&GaussianPacketSpec::new(-5.0, 2.0, 1.5), &grid).unwrap();
        let err = propagate_and_record(&wf, &PiecewisePotential::zero(), &RecordOptions::new(vec![-3.0])).unwrap_err();
        assert!(matches!(err, Error::ProbeNotClear { .. }));
    }
}
