use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dwelltime::observables::dwell::{
    oriols_reflection_time, oriols_transmission_time, reflection_time, transmission_time, SUM_RULE_TOLERANCE,
};
use dwelltime::observables::flux::{FLUX_SLACK, IDENTITY_TOLERANCE};
use dwelltime::observables::{unit_scales, DwellTimeReport, TransmissionReadout, UnitScales};
use dwelltime::trajectories::{critical_trajectory_drift, EnsembleOutcome, Label};
use dwelltime::{Error, Execution, Scenario, Simulation};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Relative formula/trajectory gap (in units of `tau_D`) accepted by `validate`.
pub const ORACLE_TOLERANCE: f64 = 0.02;
/// Largest accepted right-mass drift along the critical trajectory.
pub const CRITICAL_DRIFT_TOLERANCE: f64 = 0.01;
/// Slack on the monotonicity of dwell-time curves.
pub const CURVE_SLACK: f64 = 1e-6;

pub struct Context {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub out: PathBuf,
    pub oracle: bool,
    pub exec: Execution,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn label(l: Label) -> &'static str {
    match l {
        Label::Transmitted => "transmitted",
        Label::Reflected => "reflected",
    }
}

struct Csv {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Csv {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e.into()))?;
        let mut csv = Self { path, writer };
        csv.row(header.iter().copied())?;
        Ok(csv)
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::io(&self.path, e.into()))
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Observables invariants re-checked before anything is written.
fn check_emission(sim: &Simulation, readout: &TransmissionReadout) -> Result<(), CliError> {
    sim.record.flux.check_identity(IDENTITY_TOLERANCE)?;
    sim.record.flux.check_bounds(FLUX_SLACK)?;
    if !(0.0..=1.0).contains(&readout.t2) {
        return Err(Error::Invariant(format!("|T|^2 = {} outside [0, 1]", readout.t2)).into());
    }
    Ok(())
}

fn check_sum_rule(report: &DwellTimeReport) -> Result<(), CliError> {
    let err = report.sum_rule_error();
    if err > SUM_RULE_TOLERANCE {
        return Err(Error::Invariant(format!("sum rule violated by {err:.3e} (relative)")).into());
    }
    Ok(())
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let o = &ctx.config.output;
    let sim = ctx.scenario.simulate(false, Some((o.density_every_steps, o.density_every_nodes)))?;
    let readout = sim.transmission()?;
    check_emission(&sim, &readout)?;

    let movie = sim.record.movie.as_ref().expect("density movie requested");
    let mut density = Csv::create(&ctx.out, "density.csv", &["t", "x", "rho"])?;
    for (t, row) in movie.times.iter().zip(&movie.rows) {
        for (x, rho) in movie.xs.iter().zip(row) {
            density.row([num(*t), num(*x), num(*rho)])?;
        }
    }
    let density = density.finish()?;

    let mut flux = Csv::create(&ctx.out, "flux.csv", &["t", "j_a", "j_b", "f_a", "f_b", "T2_line"])?;
    let (a, b) = (sim.edge_a(), sim.edge_b());
    for (k, t) in sim.times().iter().enumerate() {
        flux.row([num(*t), num(a.j[k]), num(b.j[k]), num(a.f[k]), num(b.f[k]), num(readout.t2)])?;
    }
    let flux = flux.finish()?;

    println!(
        "|T|^2 = {:.6} (flux at b settled since t = {:.2}, residual {:.2e})",
        readout.t2, readout.settled_since, readout.residual
    );
    println!("flux-density identity error {:.2e}", sim.record.flux.identity_error());
    println!("sign changes of j(b): {}", b.sign_changes());
    println!("propagation {:.2} s", sim.propagation_seconds);
    println!("wrote {} and {}", density.display(), flux.display());
    Ok(())
}

#[derive(Serialize)]
struct UnitEcho {
    v0_ev: f64,
    m_eff_ratio: f64,
    scales: UnitScales,
    tau_t_fs: f64,
    tau_r_fs: f64,
    tau_d_fs: f64,
}

#[derive(Serialize)]
struct OracleEcho {
    report: DwellTimeReport,
    x_c: f64,
    casualties: usize,
    lost_weight: f64,
    gap_tau_t: f64,
    gap_tau_r: f64,
}

#[derive(Serialize)]
struct DwellEcho<'a> {
    config: &'a ScenarioConfig,
    transmission: TransmissionReadout,
    formula: DwellTimeReport,
    trajectories: Option<OracleEcho>,
    units: Option<UnitEcho>,
}

fn units_echo(config: &ScenarioConfig, report: &DwellTimeReport) -> Result<Option<UnitEcho>, CliError> {
    let Some(u) = config.units else { return Ok(None) };
    let scales = unit_scales(u.v0_ev, u.m_eff_ratio)?;
    Ok(Some(UnitEcho {
        v0_ev: u.v0_ev,
        m_eff_ratio: u.m_eff_ratio,
        scales,
        tau_t_fs: report.tau_t * scales.t_unit_fs,
        tau_r_fs: report.tau_r * scales.t_unit_fs,
        tau_d_fs: report.tau_d * scales.t_unit_fs,
    }))
}

fn oracle_echo(outcome: EnsembleOutcome, formula: &DwellTimeReport) -> OracleEcho {
    let r = outcome.report;
    OracleEcho {
        gap_tau_t: (r.tau_t - formula.tau_t).abs() / formula.tau_d,
        gap_tau_r: (r.tau_r - formula.tau_r).abs() / formula.tau_d,
        x_c: outcome.ensemble.x_c,
        casualties: outcome.ensemble.casualties.len(),
        lost_weight: outcome.ensemble.lost_weight(),
        report: r,
    }
}

pub fn dwell(ctx: &Context) -> Result<(), CliError> {
    let sim = ctx.scenario.simulate(ctx.oracle, None)?;
    let (readout, formula) = sim.formula_report()?;
    check_emission(&sim, &readout)?;
    check_sum_rule(&formula)?;

    let curves = sim.curves(readout.t2, ctx.config.output.curve_every, ctx.exec)?;
    if curves.max_sum_rule_error() > SUM_RULE_TOLERANCE {
        return Err(Error::Invariant(format!("curve sum rule violated by {:.3e}", curves.max_sum_rule_error())).into());
    }
    let mut csv =
        Csv::create(&ctx.out, "dwell_curves.csv", &["s", "tau_T", "tau_R", "tau_D", "tau_T_cond", "tau_R_cond"])?;
    for k in 0..curves.s.len() {
        csv.row([
            num(curves.s[k]),
            num(curves.tau_t[k]),
            num(curves.tau_r[k]),
            num(curves.tau_d[k]),
            num(curves.tau_t_cond[k]),
            num(curves.tau_r_cond[k]),
        ])?;
    }
    let curves_path = csv.finish()?;

    let trajectories = if ctx.oracle {
        let outcome = sim.trajectory_report(readout.t2, &ctx.scenario.ensemble_options(), ctx.exec)?;
        Some(oracle_echo(outcome, &formula))
    } else {
        None
    };
    let units = units_echo(&ctx.config, &formula)?;
    let echo = DwellEcho { config: &ctx.config, transmission: readout, formula, trajectories, units };
    let report_path = ctx.out.join("report.json");
    let text = serde_json::to_string_pretty(&echo).expect("report serializes");
    fs::write(&report_path, text + "\n").map_err(|e| CliError::io(&report_path, e))?;

    let f = &echo.formula;
    println!("|T|^2 = {:.6}", echo.transmission.t2);
    println!(
        "formula on [{}, {}]: tau_T = {:.6}  tau_R = {:.6}  tau_D = {:.6}",
        f.window.0, f.window.1, f.tau_t, f.tau_r, f.tau_d
    );
    if let Some(o) = &echo.trajectories {
        println!(
            "trajectories (N = {}): tau_T = {:.6}  tau_R = {:.6}  gaps {:.3}% / {:.3}% of tau_D",
            ctx.scenario.trajectories.n,
            o.report.tau_t,
            o.report.tau_r,
            100.0 * o.gap_tau_t,
            100.0 * o.gap_tau_r
        );
    }
    if let Some(u) = &echo.units {
        println!(
            "units: t = {:.4} fs, x = {:.3} A; tau_T = {:.3} fs, tau_R = {:.3} fs",
            u.scales.t_unit_fs, u.scales.x_unit_angstrom, u.tau_t_fs, u.tau_r_fs
        );
    }
    println!("wrote {} and {}", curves_path.display(), report_path.display());
    Ok(())
}

pub fn trajectories(ctx: &Context) -> Result<(), CliError> {
    let sim = ctx.scenario.simulate(true, None)?;
    let readout = sim.transmission()?;
    check_emission(&sim, &readout)?;
    let mut options = ctx.scenario.ensemble_options();
    options.n = ctx.config.output.paths;
    let outcome = sim.trajectory_report(readout.t2, &options, ctx.exec)?;
    let every = ctx.config.output.path_every;

    let mut csv = Csv::create(&ctx.out, "trajectories.csv", &["trajectory_id", "t", "x", "label"])?;
    for (id, tr) in outcome.ensemble.trajectories.iter().enumerate() {
        for (k, x) in tr.path.iter().enumerate().step_by(every) {
            csv.row([id.to_string(), num(tr.time(k)), num(*x), label(tr.label).to_string()])?;
        }
    }
    let path = csv.finish()?;
    for c in &outcome.ensemble.casualties {
        eprintln!("casualty: start {:.6} ({})", c.x0, c.error);
    }
    let transmitted = outcome.ensemble.trajectories.iter().filter(|t| t.label == Label::Transmitted).count();
    println!(
        "{} trajectories, {} transmitted (|T|^2 = {:.4}), x_c = {:.6}",
        outcome.ensemble.trajectories.len(),
        transmitted,
        readout.t2,
        outcome.ensemble.x_c
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// Mean wall time of `f` over enough repetitions to fill a few milliseconds.
fn timed<R>(mut f: impl FnMut() -> Result<R, Error>) -> Result<(R, f64), Error> {
    let clock = Instant::now();
    let mut value = f()?;
    let mut reps = 1u32;
    while clock.elapsed().as_secs_f64() < 0.005 && reps < 10_000 {
        value = f()?;
        reps += 1;
    }
    Ok((value, clock.elapsed().as_secs_f64() / reps as f64))
}

pub fn benchmark(ctx: &Context) -> Result<(), CliError> {
    let sim = ctx.scenario.simulate(true, None)?;
    let ((readout, formula), formula_seconds) = timed(|| sim.formula_report())?;
    check_emission(&sim, &readout)?;
    let options = ctx.scenario.ensemble_options();
    let serial = sim.trajectory_report(readout.t2, &options, Execution::Serial)?;
    let parallel = sim.trajectory_report(readout.t2, &options, Execution::Parallel)?;
    let serial_seconds = serial.report.wall_time;

    let flux_bytes = sim.record.flux.storage_bytes();
    let history_bytes = sim.history()?.storage_bytes();
    let mut csv = Csv::create(
        &ctx.out,
        "benchmark.csv",
        &["method", "wall_seconds", "tau_T", "tau_R", "ratio_to_serial", "storage_bytes"],
    )?;
    let ratio = |s: f64| num(s / serial_seconds);
    csv.row([
        "propagation_shared".to_string(),
        num(sim.propagation_seconds),
        String::new(),
        String::new(),
        ratio(sim.propagation_seconds),
        flux_bytes.to_string(),
    ])?;
    csv.row([
        "formula".to_string(),
        num(formula_seconds),
        num(formula.tau_t),
        num(formula.tau_r),
        ratio(formula_seconds),
        flux_bytes.to_string(),
    ])?;
    for (name, outcome) in [("trajectories_serial", &serial), ("trajectories_parallel", &parallel)] {
        let r = &outcome.report;
        let bytes = history_bytes + outcome.ensemble.storage_bytes();
        csv.row([
            name.to_string(),
            num(r.wall_time),
            num(r.tau_t),
            num(r.tau_r),
            ratio(r.wall_time),
            bytes.to_string(),
        ])?;
    }
    let path = csv.finish()?;

    println!("propagation (shared, excluded): {:.3} s", sim.propagation_seconds);
    println!(
        "formula: {:.3e} s; trajectories (N = {}): serial {:.3} s, parallel {:.3} s",
        formula_seconds, options.n, serial_seconds, parallel.report.wall_time
    );
    println!("formula / serial trajectories = {:.3e}", formula_seconds / serial_seconds);
    println!("storage: fluxes {} B, snapshot history {} B", flux_bytes, history_bytes);
    println!("wrote {}", path.display());
    Ok(())
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn record(&mut self, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
}

fn within(value: f64, limit: f64, what: &str) -> Result<String, String> {
    let text = format!("{what} = {value:.3e} (limit {limit:.1e})");
    if value <= limit {
        Ok(text)
    } else {
        Err(text)
    }
}

/// Run the invariant suite; prints one line per check.
pub fn validate(ctx: &Context) -> Result<(), CliError> {
    let mut checks = Checks { failed: 0 };
    let s = &ctx.scenario;
    let sim = match s.simulate(ctx.oracle, None) {
        Ok(sim) => sim,
        Err(e) => {
            checks.record("propagation", Err(e.to_string()));
            return Err(CliError::Validation(checks.failed));
        }
    };
    checks.record("norm conservation", within(sim.record.max_norm_drift, 1e-8, "max norm drift"));
    let flux = &sim.record.flux;
    checks.record("flux-density identity", within(flux.identity_error(), IDENTITY_TOLERANCE, "max |f_q - right_mass|"));
    checks.record(
        "flux bounds",
        flux.check_bounds(FLUX_SLACK).map(|_| "f_q within [0, 1] up to slack".into()).map_err(|e| e.to_string()),
    );
    checks.record("j(b) sign changes", Ok(format!("{}", sim.edge_b().sign_changes())));

    let readout = match sim.transmission() {
        Ok(r) => {
            checks.record("transmission readout", Ok(format!("|T|^2 = {:.6}, residual {:.2e}", r.t2, r.residual)));
            r
        }
        Err(e) => {
            checks.record("transmission readout", Err(e.to_string()));
            return Err(CliError::Validation(checks.failed));
        }
    };
    let t2 = readout.t2;
    let (t, fa, fb) = (sim.times(), &sim.edge_a().f, &sim.edge_b().f);
    let (ti, tf) = s.window;
    let windows = [(ti, tf), (ti, ti + 0.5 * (tf - ti)), (ti + 0.25 * (tf - ti), tf)];
    let mut worst = 0.0_f64;
    for &(lo, hi) in &windows {
        match sim.formula_report_on(t2, (lo, hi)) {
            Ok(r) => worst = worst.max(r.sum_rule_error()),
            Err(e) => {
                checks.record("sum rule", Err(e.to_string()));
                worst = f64::INFINITY;
            }
        }
    }
    if worst.is_finite() {
        checks.record("sum rule", within(worst, SUM_RULE_TOLERANCE, "relative error"));
    }
    match sim.curves(t2, ctx.config.output.curve_every, ctx.exec) {
        Ok(c) => {
            checks.record("monotone curves", within(c.max_decrease(), CURVE_SLACK, "largest decrease"));
            checks.record("curve sum rule", within(c.max_sum_rule_error(), SUM_RULE_TOLERANCE, "relative error"));
        }
        Err(e) => checks.record("curves", Err(e.to_string())),
    }
    let below = fb.iter().zip(t).filter(|(_, &tk)| tk >= ti && tk <= tf).all(|(f, _)| *f <= t2);
    if below {
        let gap = |g: Result<f64, Error>, r: Result<f64, Error>| match (g, r) {
            (Ok(g), Ok(r)) => Ok((g - r).abs()),
            (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
        };
        let dt = gap(transmission_time(t, fa, fb, t2, ti, tf), oriols_transmission_time(t, fa, fb, t2, ti, tf));
        let dr = gap(reflection_time(t, fa, fb, t2, ti, tf), oriols_reflection_time(t, fa, fb, t2, ti, tf));
        checks.record(
            "oriols reduction",
            dt.and_then(|a| dr.map(|b| a.max(b))).and_then(|d| within(d, 1e-12, "difference")),
        );
    } else {
        checks.record("oriols reduction", Ok("not applicable: f_b exceeds |T|^2 inside the window".into()));
    }

    if ctx.oracle {
        match sim.density_dwell_time() {
            Ok(d) => {
                let flux_route = sim.formula_report_on(t2, s.window).map(|r| r.tau_d).unwrap_or(f64::NAN);
                let bound = 2.0 * flux.identity_error() * (tf - ti);
                checks.record(
                    "density route",
                    within((d - flux_route).abs(), bound.max(1e-12), "|tau_D(density) - tau_D(flux)|"),
                );
            }
            Err(e) => checks.record("density route", Err(e.to_string())),
        }
        let formula = sim.formula_report_on(t2, s.window);
        match (formula, sim.trajectory_report(t2, &s.ensemble_options(), ctx.exec)) {
            (Ok(f), Ok(out)) => {
                let gt = (out.report.tau_t - f.tau_t).abs() / f.tau_d;
                let gr = (out.report.tau_r - f.tau_r).abs() / f.tau_d;
                checks.record("oracle tau_T", within(gt, ORACLE_TOLERANCE, "gap / tau_D"));
                checks.record("oracle tau_R", within(gr, ORACLE_TOLERANCE, "gap / tau_D"));
                let h = sim.history().expect("history kept");
                let crossings = out.ensemble.crossings(h.dx()).len();
                checks.record(
                    "no crossing",
                    if crossings == 0 {
                        Ok("order preserved".into())
                    } else {
                        Err(format!("{crossings} crossing pair(s)"))
                    },
                );
                match critical_trajectory_drift(h, out.ensemble.x_c, t2, &s.velocity_options()) {
                    Ok((_, drift)) => checks
                        .record("critical trajectory", within(drift, CRITICAL_DRIFT_TOLERANCE, "right-mass drift")),
                    Err(e) => checks.record("critical trajectory", Err(e.to_string())),
                }
            }
            (Err(e), _) | (_, Err(e)) => checks.record("trajectory oracle", Err(e.to_string())),
        }
    }
    if checks.failed == 0 {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Validation(checks.failed))
    }
}
