use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use randbq::embeddings::kernel_mean_numeric;
use randbq::hyper::{run_gibbs, ChainConfig, GibbsProblem, HyperPrior};
use randbq::{
    bq_posterior, fill_distance_1d, gram_matrix, prefix_posteriors, Embedding, KernelVariant,
    Measure,
};
use randbq_bench::{gaussian_design, kernel, matern, student_embedding, student_measure};
use std::hint::black_box;

fn bench_cholesky(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_cholesky");
    for n in [100, 500, 1000] {
        let d = gaussian_design(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &d, |b, d| {
            b.iter(|| gram_matrix(&matern(), black_box(&d.points), 1e-8).unwrap())
        });
    }
    group.finish();
}

fn bench_posterior(c: &mut Criterion) {
    let mut group = c.benchmark_group("bq_posterior");
    group.sample_size(20);
    for variant in [KernelVariant::Rbf, KernelVariant::Matern32] {
        let k = kernel(variant);
        let emb = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
        let d = gaussian_design(500);
        group.bench_function(BenchmarkId::new(variant.name(), 500), |b| {
            b.iter(|| bq_posterior(&k, &emb, black_box(&d), 1e-8).unwrap())
        });
    }
    let k = matern();
    let emb = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
    let d = gaussian_design(500);
    let lengths: Vec<usize> = (1..=500).collect();
    group.bench_function("prefix_path/500", |b| {
        b.iter(|| prefix_posteriors(&k, &emb, black_box(&d), 1e-8, &lengths).unwrap())
    });
    group.finish();
}

fn bench_numeric_embedding(c: &mut Criterion) {
    let k = matern();
    let m = student_measure();
    c.bench_function("kernel_mean_numeric/t4.49", |b| {
        b.iter(|| kernel_mean_numeric(&k, &m, black_box(0.7), 1e-10).unwrap())
    });
    let mut group = c.benchmark_group("student_posterior");
    group.sample_size(10);
    let emb = student_embedding(k);
    let d = gaussian_design(200);
    group.bench_function("200", |b| {
        b.iter(|| bq_posterior(&k, &emb, black_box(&d), 1e-8).unwrap())
    });
    group.finish();
}

fn bench_fill(c: &mut Criterion) {
    let d = gaussian_design(4096);
    let r = (4096f64).ln().sqrt();
    c.bench_function("fill_distance_1d/4096", |b| {
        b.iter(|| fill_distance_1d(black_box(&d.points), r).unwrap())
    });
}

fn bench_gibbs(c: &mut Criterion) {
    let d = gaussian_design(100);
    let p = GibbsProblem::new(
        &d.points,
        &d.values,
        KernelVariant::Rbf,
        HyperPrior::default(),
        1e-8,
    )
    .unwrap();
    let cfg = ChainConfig {
        iterations: 100,
        burn_in: 10,
        ..Default::default()
    };
    let mut group = c.benchmark_group("gibbs");
    group.sample_size(10);
    group.bench_function("rbf/n100/100_sweeps", |b| {
        b.iter(|| run_gibbs(&p, &cfg, 1).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_cholesky,
    bench_posterior,
    bench_numeric_embedding,
    bench_fill,
    bench_gibbs
);
criterion_main!(benches);
