use dwelltime::observables::dwell::{
    flux_dwell_time, oriols_reflection_time, oriols_transmission_time, reflection_time, transmission_time,
};
use dwelltime::observables::flux::cumulative_flux;
use dwelltime::potential::PiecewisePotential;
use dwelltime::trajectories::{time_inside, trajectory_dwell};
use dwelltime::{double_barrier, make_grid, CrankNicolson, WaveFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn times(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

fn window(n: usize, dt: f64, lo: f64, hi: f64) -> (f64, f64) {
    let span = (n - 1) as f64 * dt;
    let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    (a * span, b * span)
}

proptest! {
    #[test]
    fn sum_rule_holds_for_any_fluxes(
        fa in prop::collection::vec(-0.1f64..1.1, 40),
        fb in prop::collection::vec(-0.1f64..1.1, 40),
        t2 in 0.0f64..1.0,
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
    ) {
        let t = times(40, 0.3);
        let (ti, tf) = window(40, 0.3, lo, hi);
        let tt = transmission_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        let tr = reflection_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        let td = flux_dwell_time(&t, &fa, &fb, ti, tf).unwrap();
        let scale = tt.abs() + tr.abs() + td.abs();
        prop_assert!((tt + tr - td).abs() <= 1e-10 * scale + 1e-15, "{tt} + {tr} vs {td}");
    }

    #[test]
    fn extreme_t2_reduces_to_dwell(
        fa in prop::collection::vec(0.0f64..1.0, 30),
        fb in prop::collection::vec(0.0f64..1.0, 30),
    ) {
        let t = times(30, 0.5);
        let tf = t[29];
        let td = flux_dwell_time(&t, &fa, &fb, 0.0, tf).unwrap();
        let tt = transmission_time(&t, &fa, &fb, 1.0, 0.0, tf).unwrap();
        let tr = reflection_time(&t, &fa, &fb, 0.0, 0.0, tf).unwrap();
        prop_assert!((tt - td).abs() <= 1e-12 * td.abs().max(1.0));
        prop_assert!((tr - td).abs() <= 1e-12 * td.abs().max(1.0));
    }

    #[test]
    fn oriols_forms_agree_when_fb_stays_below_t2(
        fa in prop::collection::vec(0.0f64..1.0, 30),
        u in prop::collection::vec(0.0f64..1.0, 30),
        t2 in 0.05f64..0.95,
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
    ) {
        let fb: Vec<f64> = u.iter().map(|v| v * t2).collect();
        let t = times(30, 0.2);
        let (ti, tf) = window(30, 0.2, lo, hi);
        let general = transmission_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        let reduced = oriols_transmission_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        prop_assert!((general - reduced).abs() <= 1e-12);
        let general = reflection_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        let reduced = oriols_reflection_time(&t, &fa, &fb, t2, ti, tf).unwrap();
        prop_assert!((general - reduced).abs() <= 1e-12);
    }

    #[test]
    fn cumulative_flux_of_a_constant_is_linear(j in -3.0f64..3.0, n in 2usize..60, dt in 0.01f64..1.0) {
        let t = times(n, dt);
        let f = cumulative_flux(&vec![j; n], &t).unwrap();
        for (fk, tk) in f.iter().zip(&t) {
            prop_assert!((fk - j * tk).abs() <= 1e-12 * (1.0 + (j * tk).abs()));
        }
    }

    #[test]
    fn straight_crossing_takes_width_over_speed(v in 0.2f64..5.0, x0 in -30.0f64..-10.0) {
        let dt = 0.05;
        let path: Vec<f64> = (0..2000).map(|k| x0 + v * k as f64 * dt).collect();
        let d = trajectory_dwell(0.0, dt, &path, -3.0, 3.0, 0.0, 99.95).unwrap();
        let end = x0 + v * 99.95;
        let expected = if end <= -3.0 { 0.0 } else { (end.min(3.0) + 3.0).max(0.0) / v };
        prop_assert!((d - expected).abs() <= dt, "{d} vs {expected}");
    }

    #[test]
    fn segment_sojourn_is_bounded_by_its_duration(x0 in -10.0f64..10.0, x1 in -10.0f64..10.0) {
        let d = time_inside(x0, x1, 1.0, 1.5, -3.0, 3.0);
        prop_assert!((0.0..=0.5 + 1e-15).contains(&d));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crank_nicolson_is_linear(
        re in prop::collection::vec(-1.0f64..1.0, 4),
        centers in prop::collection::vec(-20.0f64..20.0, 2),
    ) {
        let grid = make_grid(-50.0, 50.0, 801, 0.0, 0.05, 1).unwrap();
        let v = double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).unwrap();
        let bump = |c: f64, k: f64| -> Vec<Complex64> {
            grid.positions().map(|x| Complex64::from_polar((-(x - c) * (x - c) / 8.0).exp(), k * x)).collect()
        };
        let (p1, p2) = (bump(centers[0], 1.1), bump(centers[1], -0.7));
        let (alpha, beta) = (Complex64::new(re[0], re[1]), Complex64::new(re[2], re[3]));
        let mut cn = CrankNicolson::new(&grid, &v).unwrap();
        let mut mixed: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, b)| alpha * a + beta * b).collect();
        let (mut s1, mut s2) = (p1.clone(), p2.clone());
        cn.advance(&mut mixed);
        cn.advance(&mut s1);
        cn.advance(&mut s2);
        for i in 0..mixed.len() {
            prop_assert!((mixed[i] - (alpha * s1[i] + beta * s2[i])).norm() < 1e-13);
        }
    }

    #[test]
    fn crank_nicolson_preserves_the_norm(c in -20.0f64..20.0, k in -2.0f64..2.0) {
        let grid = make_grid(-50.0, 50.0, 801, 0.0, 0.05, 20).unwrap();
        let values = grid.positions().map(|x| Complex64::from_polar((-(x - c) * (x - c) / 8.0).exp(), k * x)).collect();
        let mut wf = WaveFunction::new(grid, 0.0, values);
        wf.normalize();
        let mut cn = CrankNicolson::new(&grid, &PiecewisePotential::zero()).unwrap();
        for _ in 0..grid.n_steps() {
            let before = wf.norm();
            cn.step(&mut wf);
            prop_assert!((wf.norm() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn right_mass_profile_inverts(level in 0.001f64..0.999, c in -10.0f64..10.0) {
        let grid = make_grid(-50.0, 50.0, 801, 0.0, 0.05, 1).unwrap();
        let values = grid.positions().map(|x| Complex64::new((-(x - c) * (x - c) / 8.0).exp(), 0.0)).collect();
        let mut wf = WaveFunction::new(grid, 0.0, values);
        wf.normalize();
        let profile = wf.right_mass_profile();
        let x = profile.position_of(level * profile.total()).unwrap();
        prop_assert!((profile.at(x) - level * profile.total()).abs() < 1e-10);
    }
}
