use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpa::attacks::{AttackConfig, AttackKind};
use mpa::classifier::{train_standard, TrainConfig};
use mpa::harness::{evaluate, generate_dataset};
use mpa::lp_geometry::NormId;

// jobs = 1 is the sequential path; jobs = 0 uses the rayon pool when the
// `parallel` feature is on and falls back to sequential otherwise.
fn attack_throughput(c: &mut Criterion) {
    let (train, test) = generate_dataset(0, 4, 64, 400, 64, 0.5).unwrap();
    let model = train_standard(&train, &TrainConfig { epochs: 5, ..TrainConfig::default() }).unwrap();
    let cases = [
        ("pgd-linf", AttackKind::Pgd, AttackConfig::single(NormId::LInf, 64)),
        ("mpa", AttackKind::Mpa, AttackConfig::mpa_defaults(64)),
    ];

    let mut group = c.benchmark_group("evaluate_64_examples");
    group.sample_size(10);
    for (name, kind, cfg) in &cases {
        for (label, jobs) in [("sequential", 1), ("pool", 0)] {
            group.bench_with_input(BenchmarkId::new(*name, label), &jobs, |b, &jobs| {
                b.iter(|| evaluate(&model, *kind, cfg, &test, jobs).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, attack_throughput);
criterion_main!(benches);
