use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gasdecay::numerics::Execution;
use gasdecay::scheme::{InitialData, MeshConfig, Scheme};
use gasdecay::GasParams;

fn step(c: &mut Criterion) {
    let g = GasParams::new(2.0, 1.0).unwrap();
    let data = InitialData::random_bounded(&g, 7, 16, -5.0, 5.0, (0.5, 2.0), 0.5).unwrap();
    let mut group = c.benchmark_group("step");
    for dx in [0.01, 0.0025] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut cfg = MeshConfig::new(g, dx, -20.0, 20.0, 1.0);
            cfg.execution = exec;
            let (scheme, state) = Scheme::new(cfg, &data).unwrap();
            let cells = state.cells.len();
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), cells), &state, |b, s| {
                b.iter(|| scheme.step(black_box(s)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, step);
criterion_main!(benches);
