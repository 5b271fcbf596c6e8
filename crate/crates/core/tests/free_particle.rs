use dwelltime::observables::dwell::{reflection_time, transmission_time};
use dwelltime::potential::PiecewisePotential;
use dwelltime::{gaussian_packet, make_grid, CrankNicolson, GaussianPacketSpec, Scenario, SimulationGrid};
use num_complex::Complex64;

mod common;

fn analytic_center(spec: &GaussianPacketSpec, t: f64) -> f64 {
    spec.x0 + 2.0 * spec.k0 * t
}

fn analytic_spread(spec: &GaussianPacketSpec, t: f64) -> f64 {
    let s2 = spec.sigma_x * spec.sigma_x;
    spec.sigma_x * (1.0 + (t / s2) * (t / s2)).sqrt()
}

#[test]
fn center_and_spread_follow_the_free_gaussian() {
    let grid = make_grid(-150.0, 150.0, 6001, 0.0, 0.01, 800).unwrap();
    let spec = GaussianPacketSpec::new(-20.0, 2.5, 1.5);
    let mut wf = gaussian_packet(&spec, &grid).unwrap();
    let mut cn = CrankNicolson::new(&grid, &PiecewisePotential::zero()).unwrap();
    for k in 1..=grid.n_steps() {
        cn.step(&mut wf);
        if k % 200 == 0 {
            let t = grid.t(k);
            let moved = wf.mean_position() - spec.x0;
            let expected = analytic_center(&spec, t) - spec.x0;
            assert!(common::rel(moved, expected) < 5e-3, "t = {t}: {moved} vs {expected}");
            let spread = wf.position_spread();
            assert!(common::rel(spread, analytic_spread(&spec, t)) < 5e-3, "t = {t}: {spread}");
        }
    }
}

#[test]
fn negative_momentum_mass_matches_fourier_quadrature() {
    let grid = make_grid(-40.0, 40.0, 3201, 0.0, 0.01, 1).unwrap();
    let spec = GaussianPacketSpec::new(0.0, 0.6, 1.5);
    let wf = dwelltime::packet::gaussian_packet_with_limit(&spec, &grid, 1.0).unwrap();
    // |phi(k)|^2 / (2 pi) integrated over k < 0 by the midpoint rule
    let (k_lo, n_k) = (-12.0_f64, 4800);
    let dk = -k_lo / n_k as f64;
    let dx = grid.dx();
    let mut mass = 0.0;
    for m in 0..n_k {
        let k = k_lo + (m as f64 + 0.5) * dk;
        let phi: Complex64 =
            grid.positions().zip(wf.values()).map(|(x, v)| v * Complex64::from_polar(1.0, -k * x)).sum::<Complex64>()
                * dx;
        mass += phi.norm_sqr() * dk / (2.0 * std::f64::consts::PI);
    }
    assert!((mass - spec.negative_momentum_mass()).abs() < 1e-6, "{mass} vs {}", spec.negative_momentum_mass());
}

#[test]
fn free_scenario_transmits_everything() {
    let mut s = Scenario::double_barrier_default();
    s.grid = SimulationGrid::new(-500.0, 500.0, 8001, 0.0, 0.05, 1600).unwrap();
    s.potential = PiecewisePotential::zero();
    let sim = s.simulate(false, None).unwrap();
    let readout = sim.transmission().unwrap();
    assert!((readout.t2 - 1.0).abs() < 1e-3, "{}", readout.t2);
    let (t, fa, fb) = (sim.times(), &sim.edge_a().f, &sim.edge_b().f);
    let tau_t = transmission_time(t, fa, fb, 1.0, 0.0, 40.0).unwrap();
    let tau_r = reflection_time(t, fa, fb, 1.0, 0.0, 40.0).unwrap();
    // (b - a) / v for the packet as a whole
    assert!(common::rel(tau_t, 6.0 / 3.0) < 0.02, "{tau_t}");
    assert!(tau_r <= 1e-3 * tau_t, "{tau_r}");
}
