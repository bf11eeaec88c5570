use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hodge_bench::{coefficients, smooth_load, trig_samples, unit_box};
use hodge_core::weights::{BallFamily, FamilySpec, MaximalProfile};
use hodge_core::{FaceCondition, HodgeSystem, Signature};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    let sig = Signature::new(2, 1, 1);
    for nodes in [17, 33] {
        let d = unit_box(2, nodes);
        let (a, b) = coefficients(&d, sig);
        for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
            group.bench_with_input(BenchmarkId::new(format!("{bc:?}"), nodes), &nodes, |bench, _| {
                bench.iter(|| HodgeSystem::assemble(&a, &b, 1.0, bc).unwrap())
            });
        }
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let sig = Signature::new(2, 1, 1);
    for nodes in [17, 33, 65] {
        let d = unit_box(2, nodes);
        let (a, b) = coefficients(&d, sig);
        let f = smooth_load(&d, sig);
        group.bench_with_input(BenchmarkId::new("assemble_and_solve", nodes), &nodes, |bench, _| {
            bench.iter(|| {
                let sys = HodgeSystem::assemble(&a, &b, 1.0, FaceCondition::Tangential).unwrap();
                sys.solve(black_box(&f), None).unwrap()
            })
        });
    }
    group.finish();
}

fn maximal(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximal_profile");
    group.sample_size(10);
    for nodes in [33, 65] {
        let (grid, f) = trig_samples(nodes);
        let family = BallFamily::dyadic(&grid, FamilySpec::default());
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &nodes, |bench, _| {
            bench.iter(|| MaximalProfile::compute(&grid, black_box(&f), 0.25, &family).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, solve, maximal);
criterion_main!(benches);
