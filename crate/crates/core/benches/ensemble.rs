use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwelltime::{double_barrier, Execution, GaussianPacketSpec, Scenario, SimulationGrid, SnapshotOptions};

fn scenario() -> Scenario {
    let mut s = Scenario::double_barrier_default();
    s.grid = SimulationGrid::new(-400.0, 400.0, 6401, 0.0, 0.05, 1600).unwrap();
    s.potential = double_barrier(-6.0, -3.0, 3.0, 6.0, 2.0).unwrap();
    s.packet = GaussianPacketSpec::new(-35.0, 3.5, 1.5);
    s.window = (0.0, 40.0);
    s.snapshots = SnapshotOptions { keep_every: 2, until: Some(40.0), x_range: Some((-200.0, 200.0)) };
    s.trajectories.n = 200;
    s
}

fn bench(c: &mut Criterion) {
    let s = scenario();
    let sim = s.simulate(true, None).unwrap();
    let t2 = sim.record.final_state.right_mass(s.probes.1).unwrap();
    let options = s.ensemble_options();

    let mut group = c.benchmark_group("dwell_times");
    group.sample_size(10);
    group.bench_function("formula", |b| b.iter(|| sim.formula_report_on(t2, s.window).unwrap()));
    for exec in [Execution::Serial, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::new("trajectories", format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| sim.trajectory_report(t2, &options, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
