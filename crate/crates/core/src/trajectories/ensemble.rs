use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::observables::dwell::{DwellTimeReport, Method, CONDITIONAL_FLOOR};
use crate::propagate::SnapshotHistory;
use crate::trajectories::critical::{critical_initial_point, quantile_starts};
use crate::trajectories::field::VelocityOptions;
use crate::trajectories::integrate::{integrate_trajectory, trajectory_dwell, Label, Trajectory};
use crate::wavefunction::WaveFunction;

/// Largest fraction of weight that may be lost to failed integrations.
pub const MAX_LOST_WEIGHT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Equal-weight starts at the `k/(N+1)` quantiles of the initial density.
    #[default]
    Quantile,
    /// Equal-weight starts drawn from the initial density.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub n: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub velocity: VelocityOptions,
    pub max_lost_weight: f64,
}

impl EnsembleOptions {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            scheme: Scheme::Quantile,
            seed: 0,
            velocity: VelocityOptions::default(),
            max_lost_weight: MAX_LOST_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Casualty {
    pub index: usize,
    pub x0: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    /// Successfully integrated trajectories, ordered by start.
    pub trajectories: Vec<Trajectory>,
    pub weights: Vec<f64>,
    pub x_c: f64,
    pub scheme: Scheme,
    pub casualties: Vec<Casualty>,
}

impl TrajectoryEnsemble {
    pub fn lost_weight(&self) -> f64 {
        let n = self.trajectories.len() + self.casualties.len();
        self.casualties.len() as f64 / n as f64
    }

    /// Pairs `(i, frame)` where trajectory `i` has moved more than `tolerance`
    /// past trajectory `i + 1`.
    pub fn crossings(&self, tolerance: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, w) in self.trajectories.windows(2).enumerate() {
            for (k, (x, y)) in w[0].path.iter().zip(&w[1].path).enumerate() {
                if *x > *y + tolerance {
                    out.push((i, k));
                    break;
                }
            }
        }
        out
    }

    /// Transmitted trajectories ending left of `a` and reflected ones ending right of `b`.
    pub fn label_violations(&self, a: f64, b: f64) -> Vec<usize> {
        self.trajectories
            .iter()
            .enumerate()
            .filter(|(_, tr)| match tr.label {
                Label::Transmitted => tr.final_position() < a,
                Label::Reflected => tr.final_position() > b,
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn weight(&self, label: Label) -> f64 {
        self.trajectories.iter().zip(&self.weights).filter(|(t, _)| t.label == label).map(|(_, w)| w).sum()
    }

    pub fn storage_bytes(&self) -> usize {
        self.trajectories.iter().map(|t| t.path.len() * std::mem::size_of::<f64>()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub report: DwellTimeReport,
    pub ensemble: TrajectoryEnsemble,
}

fn starts(wf0: &WaveFunction, options: &EnsembleOptions) -> Result<Vec<f64>> {
    match options.scheme {
        Scheme::Quantile => quantile_starts(wf0, options.n),
        Scheme::Random => {
            let profile = wf0.right_mass_profile();
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let mut xs = (0..options.n)
                .map(|_| profile.position_of(profile.total() * rng.gen::<f64>()))
                .collect::<Result<Vec<_>>>()?;
            xs.sort_by(f64::total_cmp);
            Ok(xs)
        }
    }
}

/// Transmission and reflection times by direct sampling: integrate `N`
/// equal-weight trajectories from the initial density, label each by its
/// start relative to `x_c`, and accumulate the time each spends in `[a, b]`
/// during `[tau_i, tau_f]`.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_times(
    history: &SnapshotHistory,
    wf0: &WaveFunction,
    t2: f64,
    a: f64,
    b: f64,
    tau_i: f64,
    tau_f: f64,
    options: &EnsembleOptions,
    exec: Execution,
) -> Result<EnsembleOutcome> {
    let clock = Instant::now();
    if options.n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trajectories, got {}", options.n)));
    }
    if !(0.0..=1.0).contains(&t2) {
        return Err(Error::InvalidArgument(format!("transmission probability {t2} outside [0, 1]")));
    }
    let t_start = history.times().first().copied().ok_or(Error::InvalidArgument("empty history".into()))?;
    if (t_start - wf0.t()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("history starts at {t_start}, initial state is at {}", wf0.t())));
    }
    let x_c = if t2 >= 1.0 {
        wf0.grid().x_min()
    } else if t2 <= 0.0 {
        wf0.grid().x_max()
    } else {
        critical_initial_point(wf0, t2)?
    };
    let xs = starts(wf0, options)?;
    let dt = history.interval();

    let results = map_range(xs.len(), exec, |i| {
        let x0 = xs[i];
        let path = integrate_trajectory(x0, history, t_start, tau_f, &options.velocity)?;
        let dwell = trajectory_dwell(t_start, dt, &path, a, b, tau_i, tau_f)?;
        let label = if x0 > x_c { Label::Transmitted } else { Label::Reflected };
        Ok(Trajectory { x0, t_start, dt, path, label, dwell })
    });

    let weight = 1.0 / options.n as f64;
    let mut trajectories = Vec::with_capacity(xs.len());
    let mut casualties = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trajectories.push(t),
            Err(error) => casualties.push(Casualty { index, x0: xs[index], error }),
        }
    }
    let lost = casualties.len() as f64 * weight;
    if lost > options.max_lost_weight {
        return Err(Error::TooManyCasualties { lost, limit: options.max_lost_weight, count: casualties.len() });
    }
    let weights = vec![weight; trajectories.len()];
    let ensemble = TrajectoryEnsemble { trajectories, weights, x_c, scheme: options.scheme, casualties };

    let (mut tau_t, mut tau_r) = (0.0, 0.0);
    for (tr, w) in ensemble.trajectories.iter().zip(&ensemble.weights) {
        match tr.label {
            Label::Transmitted => tau_t += w * tr.dwell,
            Label::Reflected => tau_r += w * tr.dwell,
        }
    }
    let (w_t, w_r) = (ensemble.weight(Label::Transmitted), ensemble.weight(Label::Reflected));
    let mut report =
        DwellTimeReport::new(tau_t, tau_r, tau_t + tau_r, t2, 1.0 - t2, (tau_i, tau_f), Method::Trajectories);
    report.tau_t_cond = (w_t > CONDITIONAL_FLOOR).then(|| tau_t / w_t);
    report.tau_r_cond = (w_r > CONDITIONAL_FLOOR).then(|| tau_r / w_r);
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(EnsembleOutcome { report, ensemble })
}
