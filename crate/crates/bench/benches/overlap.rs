use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use overlapkit::{
    bootstrap_replicates, equicoordinate_quantile, mvn_rectangle_prob, rank_reference_overlap,
    reference_overlap, McParams, WeightScheme,
};
use overlapkit_bench::{equicorrelation, normal_dataset};
use std::hint::black_box;

fn estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference_overlap");
    for n in [50, 500, 5000] {
        let data = normal_dataset(4, 3, n, 1);
        let w = WeightScheme::proportional_for(&data);
        group.bench_with_input(BenchmarkId::new("plug_in", n), &n, |b, _| {
            b.iter(|| reference_overlap(black_box(&data), &w).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rank", n), &n, |b, _| {
            b.iter(|| rank_reference_overlap(black_box(&data), &w).unwrap())
        });
    }
    group.finish();
}

fn bootstrap(c: &mut Criterion) {
    let data = normal_dataset(3, 2, 50, 2);
    let w = WeightScheme::proportional_for(&data);
    c.bench_function("bootstrap_k3_d2_n50_b500", |b| {
        b.iter(|| bootstrap_replicates(black_box(&data), &w, 500, 7).unwrap())
    });
}

fn mvn(c: &mut Criterion) {
    let mc = McParams::default();
    let mut group = c.benchmark_group("mvn");
    for p in [2, 6, 12] {
        let corr = equicorrelation(p, 0.3);
        let (lo, hi) = (vec![-2.5; p], vec![2.5; p]);
        group.bench_with_input(BenchmarkId::new("rectangle", p), &p, |b, _| {
            b.iter(|| mvn_rectangle_prob(&corr, black_box(&lo), black_box(&hi), &mc).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("equicoordinate", p), &p, |b, _| {
            b.iter(|| equicoordinate_quantile(&corr, 0.95, &mc).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, estimators, bootstrap, mvn);
criterion_main!(benches);
