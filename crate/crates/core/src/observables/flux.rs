use serde::Serialize;

use crate::error::{Error, Result};
use crate::wavefunction::WaveFunction;

/// Slack allowed on `f_q` outside `[0, 1]`.
pub const FLUX_SLACK: f64 = 1e-3;

/// Largest accepted `|f_q(t) - right_mass(t, q)|` on a run.
pub const IDENTITY_TOLERANCE: f64 = 1e-3;

pub fn current_density(wf: &WaveFunction, q: f64) -> Result<f64> {
    wf.current_density(q)
}

pub fn right_mass(wf: &WaveFunction, q: f64) -> Result<f64> {
    wf.right_mass(q)
}

/// Cumulative trapezoid integral of `j` on uniform `times`, starting at zero.
pub fn cumulative_flux(j: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    if j.len() != times.len() {
        return Err(Error::InvalidArgument(format!("{} current samples for {} times", j.len(), times.len())));
    }
    check_uniform(times)?;
    let mut f = Vec::with_capacity(j.len());
    let mut acc = 0.0;
    for k in 0..j.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (j[k] + j[k - 1]);
        }
        f.push(acc);
    }
    Ok(f)
}

pub(crate) fn check_uniform(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Ok(());
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonUniformTimes { index: 1 });
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(Error::NonUniformTimes { index: k + 1 });
        }
    }
    Ok(())
}

/// Samples recorded at one probe position.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeSeries {
    pub q: f64,
    pub j: Vec<f64>,
    /// `int_{t_0}^{t} j(s, q) ds`
    pub f: Vec<f64>,
    /// Trapezoid `int_q^{x_max} |psi|^2`, sampled alongside for the identity check.
    pub right_mass: Vec<f64>,
}

impl ProbeSeries {
    /// `max_t |f_q(t) - right_mass(t, q)|`
    pub fn identity_error(&self) -> f64 {
        self.f.iter().zip(&self.right_mass).map(|(f, m)| (f - m).abs()).fold(0.0, f64::max)
    }

    pub fn sign_changes(&self) -> usize {
        let mut last = 0.0_f64;
        let mut count = 0;
        for &j in &self.j {
            if j != 0.0 {
                if last != 0.0 && j.signum() != last.signum() {
                    count += 1;
                }
                last = j;
            }
        }
        count
    }
}

/// Edge currents and their running integrals on a uniform time lattice.
#[derive(Debug, Clone, Serialize)]
pub struct FluxSeries {
    times: Vec<f64>,
    probes: Vec<ProbeSeries>,
}

impl FluxSeries {
    /// Build from `(q, j, right_mass)` samples; `f` is integrated here.
    pub fn from_samples(times: Vec<f64>, samples: Vec<(f64, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let probes = samples
            .into_iter()
            .map(|(q, j, right_mass)| {
                let f = cumulative_flux(&j, &times)?;
                Ok(ProbeSeries { q, j, f, right_mass })
            })
            .collect::<Result<_>>()?;
        Ok(Self { times, probes })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn probes(&self) -> &[ProbeSeries] {
        &self.probes
    }

    pub fn probe(&self, q: f64) -> Option<&ProbeSeries> {
        self.probes.iter().find(|p| (p.q - q).abs() < 1e-12)
    }

    pub fn require(&self, q: f64) -> Result<&ProbeSeries> {
        self.probe(q).ok_or_else(|| Error::InvalidArgument(format!("no probe recorded at {q}")))
    }

    pub fn identity_error(&self) -> f64 {
        self.probes.iter().map(ProbeSeries::identity_error).fold(0.0, f64::max)
    }

    /// Checks `f_q(t)` stays within `[-slack, 1 + slack]`.
    pub fn check_identity(&self, limit: f64) -> Result<()> {
        let err = self.identity_error();
        if err > limit {
            return Err(Error::Invariant(format!("flux-density identity error {err:.3e} exceeds {limit:.1e}")));
        }
        Ok(())
    }

    pub fn check_bounds(&self, slack: f64) -> Result<()> {
        for p in &self.probes {
            if let Some((k, f)) = p.f.iter().enumerate().find(|(_, f)| **f < -slack || **f > 1.0 + slack) {
                return Err(Error::Invariant(format!("f at q = {} is {f} at t = {}", p.q, self.times[k])));
            }
        }
        Ok(())
    }

    pub fn storage_bytes(&self) -> usize {
        (self.times.len() + self.probes.len() * 3 * self.times.len()) * std::mem::size_of::<f64>()
    }
}
