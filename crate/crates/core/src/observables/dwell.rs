//! Dwell, transmission and reflection times from the integrated edge fluxes.
//!
//! With `f_a`, `f_b` the running fluxes through the edges of `[a, b]`:
//!
//! ```text
//! <tau_T> = int [min(f_a, T2) - min(f_b, T2)] dt
//! <tau_R> = int [max(f_a, T2) - max(f_b, T2)] dt
//! ```
//!
//! Both use the same quadrature nodes as `<tau_D> = int (f_a - f_b) dt`, so the
//! sum rule `tau_T + tau_R = tau_D` holds to round-off.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::observables::flux::check_uniform;
use crate::propagate::SnapshotHistory;

/// Denominator below which conditional times are undefined.
pub const CONDITIONAL_FLOOR: f64 = 1e-6;

/// Relative tolerance on `tau_T + tau_R = tau_D`.
pub const SUM_RULE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Formula,
    Trajectories,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellTimeReport {
    pub tau_t: f64,
    pub tau_r: f64,
    pub tau_d: f64,
    pub tau_t_cond: Option<f64>,
    pub tau_r_cond: Option<f64>,
    pub t2: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub method: Method,
    pub wall_time: f64,
}

impl DwellTimeReport {
    /// Conditional times use `t2`/`r2` as given (flux readout or empirical weight).
    pub fn new(tau_t: f64, tau_r: f64, tau_d: f64, t2: f64, r2: f64, window: (f64, f64), method: Method) -> Self {
        Self {
            tau_t,
            tau_r,
            tau_d,
            tau_t_cond: conditional(tau_t, t2),
            tau_r_cond: conditional(tau_r, r2),
            t2,
            r2,
            window,
            method,
            wall_time: 0.0,
        }
    }

    /// Relative violation of `tau_T + tau_R = tau_D`.
    pub fn sum_rule_error(&self) -> f64 {
        let scale = self.tau_d.abs().max(f64::MIN_POSITIVE);
        (self.tau_t + self.tau_r - self.tau_d).abs() / scale
    }
}

fn conditional(tau: f64, weight: f64) -> Option<f64> {
    (weight > CONDITIONAL_FLOOR).then(|| tau / weight)
}

fn check_window(times: &[f64], tau_i: f64, tau_f: f64) -> Result<()> {
    let (start, end) = (times[0], times[times.len() - 1]);
    let eps = 1e-9 * (end - start).abs().max(1.0);
    if !(tau_i <= tau_f && tau_i >= start - eps && tau_f <= end + eps) {
        return Err(Error::Coverage { from: tau_i, to: tau_f, start, end });
    }
    Ok(())
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let h = times[1] - times[0];
    let c = ((t - times[0]) / h).clamp(0.0, (times.len() - 1) as f64);
    let k = (c.floor() as usize).min(times.len() - 2);
    let s = c - k as f64;
    values[k] + s * (values[k + 1] - values[k])
}

/// Trapezoid of `g(f_a(t), f_b(t))` over `[tau_i, tau_f]`, with `f` linearly
/// interpolated at window ends that fall between samples.
fn integrate_window<G>(times: &[f64], fa: &[f64], fb: &[f64], tau_i: f64, tau_f: f64, g: G) -> Result<f64>
where
    G: Fn(f64, f64) -> f64,
{
    if times.len() < 2 || fa.len() != times.len() || fb.len() != times.len() {
        return Err(Error::InvalidArgument("flux samples do not match the time lattice".into()));
    }
    check_window(times, tau_i, tau_f)?;
    if tau_f == tau_i {
        return Ok(0.0);
    }
    let h = times[1] - times[0];
    let tol = 1e-9 * h;
    let mut prev_t = tau_i;
    let mut prev_g = g(interpolate(times, fa, tau_i), interpolate(times, fb, tau_i));
    let mut acc = 0.0;
    let first = (((tau_i - times[0]) / h).floor().max(0.0) as usize).min(times.len() - 1);
    for k in first..times.len() {
        let t = times[k];
        if t <= tau_i + tol {
            continue;
        }
        if t >= tau_f - tol {
            break;
        }
        let gk = g(fa[k], fb[k]);
        acc += 0.5 * (t - prev_t) * (gk + prev_g);
        prev_t = t;
        prev_g = gk;
    }
    let g_end = g(interpolate(times, fa, tau_f), interpolate(times, fb, tau_f));
    acc += 0.5 * (tau_f - prev_t) * (g_end + prev_g);
    Ok(acc)
}

fn check_probability(t2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t2) {
        return Err(Error::InvalidArgument(format!("transmission probability {t2} outside [0, 1]")));
    }
    Ok(())
}

pub fn transmission_time(times: &[f64], fa: &[f64], fb: &[f64], t2: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    check_probability(t2)?;
    integrate_window(times, fa, fb, tau_i, tau_f, |a, b| a.min(t2) - b.min(t2))
}

pub fn reflection_time(times: &[f64], fa: &[f64], fb: &[f64], t2: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    check_probability(t2)?;
    integrate_window(times, fa, fb, tau_i, tau_f, |a, b| a.max(t2) - b.max(t2))
}

/// `int (f_a - f_b) dt`, the dwell time carried by the fluxes.
pub fn flux_dwell_time(times: &[f64], fa: &[f64], fb: &[f64], tau_i: f64, tau_f: f64) -> Result<f64> {
    integrate_window(times, fa, fb, tau_i, tau_f, |a, b| a - b)
}

fn require_below(times: &[f64], fb: &[f64], t2: f64, tau_i: f64, tau_f: f64) -> Result<()> {
    let h = times[1] - times[0];
    for (t, f) in times.iter().zip(fb) {
        if *t >= tau_i - h && *t <= tau_f + h && *f > t2 {
            return Err(Error::Invariant(format!("f_b({t}) = {f} exceeds |T|^2 = {t2}")));
        }
    }
    Ok(())
}

/// Reduced transmission time `int [min(f_a, T2) - f_b] dt`, valid only while `f_b <= T2`.
pub fn oriols_transmission_time(times: &[f64], fa: &[f64], fb: &[f64], t2: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    check_probability(t2)?;
    require_below(times, fb, t2, tau_i, tau_f)?;
    integrate_window(times, fa, fb, tau_i, tau_f, |a, b| a.min(t2) - b)
}

/// Reduced reflection time `int [max(f_a, T2) - T2] dt`, valid only while `f_b <= T2`.
pub fn oriols_reflection_time(times: &[f64], fa: &[f64], fb: &[f64], t2: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    check_probability(t2)?;
    require_below(times, fb, t2, tau_i, tau_f)?;
    integrate_window(times, fa, fb, tau_i, tau_f, |a, _| a.max(t2) - t2)
}

/// `int_{tau_i}^{tau_f} dt int_a^b |psi|^2 dx` over stored frames.
pub fn average_dwell_time(history: &SnapshotHistory, a: f64, b: f64, tau_i: f64, tau_f: f64) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::InvalidArgument("need at least two frames".into()));
    }
    if !(a < b && a >= history.x_min() && b <= history.x_max()) {
        return Err(Error::OutsideGrid {
            x: if a < history.x_min() { a } else { b },
            x_min: history.x_min(),
            x_max: history.x_max(),
        });
    }
    check_uniform(history.times())?;
    let mass: Vec<f64> = (0..history.len()).map(|k| history.interval_mass(k, a, b)).collect();
    let zeros = vec![0.0; mass.len()];
    integrate_window(history.times(), &mass, &zeros, tau_i, tau_f, |m, _| m)
}

/// Dwell-time functionals as functions of the upper bound `s` of `[tau_i, s]`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DwellCurves {
    pub s: Vec<f64>,
    pub tau_t: Vec<f64>,
    pub tau_r: Vec<f64>,
    pub tau_d: Vec<f64>,
    /// `NaN` where `T2` is below the conditional floor.
    pub tau_t_cond: Vec<f64>,
    pub tau_r_cond: Vec<f64>,
}

impl DwellCurves {
    /// Largest decrease between consecutive points over all three curves.
    pub fn max_decrease(&self) -> f64 {
        [&self.tau_t, &self.tau_r, &self.tau_d]
            .iter()
            .flat_map(|c| c.windows(2).map(|w| w[0] - w[1]))
            .fold(0.0, f64::max)
    }

    pub fn max_sum_rule_error(&self) -> f64 {
        (0..self.s.len())
            .map(|k| {
                let d = self.tau_d[k];
                let err = (self.tau_t[k] + self.tau_r[k] - d).abs();
                if d == 0.0 {
                    err
                } else {
                    err / d.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn dwell_time_curves(
    times: &[f64],
    fa: &[f64],
    fb: &[f64],
    t2: f64,
    tau_i: f64,
    s_values: &[f64],
    exec: Execution,
) -> Result<DwellCurves> {
    check_probability(t2)?;
    for &s in s_values {
        check_window(times, tau_i, s)?;
    }
    let rows = map_range(s_values.len(), exec, |k| {
        let s = s_values[k];
        let t = transmission_time(times, fa, fb, t2, tau_i, s)?;
        let r = reflection_time(times, fa, fb, t2, tau_i, s)?;
        let d = flux_dwell_time(times, fa, fb, tau_i, s)?;
        Ok((t, r, d))
    });
    let mut curves = DwellCurves { s: s_values.to_vec(), ..Default::default() };
    for row in rows {
        let (t, r, d) = row?;
        curves.tau_t.push(t);
        curves.tau_r.push(r);
        curves.tau_d.push(d);
        curves.tau_t_cond.push(conditional(t, t2).unwrap_or(f64::NAN));
        curves.tau_r_cond.push(conditional(r, 1.0 - t2).unwrap_or(f64::NAN));
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * h).collect()
    }

    /// smooth f_a >= f_b that overshoot and settle, with f_b crossing above 0.4
    fn fluxes(times: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fa = times.iter().map(|t| 0.5 * (1.0 - (-t).exp()) + 0.1 * (-0.2 * (t - 3.0).powi(2)).exp()).collect();
        let fb = times.iter().map(|t| 0.45 * (1.0 - (-(t - 1.0).max(0.0)).exp()) * (1.0 - (-0.5 * t).exp())).collect();
        (fa, fb)
    }

    #[test]
    fn sum_rule_any_window() {
        let t = lattice(401, 0.05);
        let (fa, fb) = fluxes(&t);
        for &(i, f) in &[(0.0, 20.0), (0.013, 7.77), (3.0, 3.0), (5.5, 19.99)] {
            let tt = transmission_time(&t, &fa, &fb, 0.4, i, f).unwrap();
            let rr = reflection_time(&t, &fa, &fb, 0.4, i, f).unwrap();
            let dd = flux_dwell_time(&t, &fa, &fb, i, f).unwrap();
            assert!((tt + rr - dd).abs() <= 1e-10 * dd.abs().max(1e-300), "{i} {f}");
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let t = lattice(401, 0.05);
        let (fa, fb) = fluxes(&t);
        let dd = flux_dwell_time(&t, &fa, &fb, 0.0, 20.0).unwrap();
        assert_eq!(transmission_time(&t, &fa, &fb, 0.0, 0.0, 20.0).unwrap(), 0.0);
        assert!((reflection_time(&t, &fa, &fb, 0.0, 0.0, 20.0).unwrap() - dd).abs() < 1e-14);
        assert!((transmission_time(&t, &fa, &fb, 1.0, 0.0, 20.0).unwrap() - dd).abs() < 1e-14);
        assert_eq!(reflection_time(&t, &fa, &fb, 1.0, 0.0, 20.0).unwrap(), 0.0);
    }

    #[test]
    fn window_checks() {
        let t = lattice(11, 0.1);
        let f = vec![0.0; 11];
        assert!(matches!(transmission_time(&t, &f, &f, 0.5, -0.5, 0.5), Err(Error::Coverage { .. })));
        assert!(matches!(transmission_time(&t, &f, &f, 0.5, 0.5, 1.5), Err(Error::Coverage { .. })));
        assert!(transmission_time(&t, &f, &f, 1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn oriols_needs_fb_below_t2() {
        let t = lattice(401, 0.05);
        let (fa, fb) = fluxes(&t);
        assert!(oriols_transmission_time(&t, &fa, &fb, 0.4, 0.0, 20.0).is_err());
        let tt = transmission_time(&t, &fa, &fb, 0.46, 0.0, 20.0).unwrap();
        let ot = oriols_transmission_time(&t, &fa, &fb, 0.46, 0.0, 20.0).unwrap();
        assert_eq!(tt, ot);
    }

    #[test]
    fn curves_start_at_zero_and_rise() {
        let t = lattice(401, 0.05);
        let (fa, fb) = fluxes(&t);
        let s: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let c = dwell_time_curves(&t, &fa, &fb, 0.4, 0.0, &s, Execution::Parallel).unwrap();
        assert_eq!((c.tau_t[0], c.tau_r[0], c.tau_d[0]), (0.0, 0.0, 0.0));
        assert!(c.max_decrease() <= 1e-12);
        assert!(c.max_sum_rule_error() < 1e-10);
    }
}
