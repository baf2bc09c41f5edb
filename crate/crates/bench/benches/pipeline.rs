use criterion::{criterion_group, criterion_main, Criterion};
use pulseblind::scan::{find_crossovers, sweep};
use pulseblind_bench::attack_500;

fn bench(c: &mut Criterion) {
    let (scenario, params) = attack_500();
    c.bench_function("sweep_0_170_quarter_km", |b| b.iter(|| sweep(&scenario, &params, 0.0, 170.0, 0.25).unwrap()));
    c.bench_function("find_crossovers_500", |b| b.iter(|| find_crossovers(&scenario, &params, 0.0, 170.0).unwrap()));
}

criterion_group!(benches, bench);
criterion_main!(benches);
