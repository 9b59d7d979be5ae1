use std::hint::black_box;

use condreg_bench::{predictor_names, regression_data};
use condreg_core::conditional::derive;
use condreg_core::geometry::ellipse;
use condreg_core::ols::fit;
use condreg_core::selection::best_subset;
use condreg_core::terms::full_quadratic;
use condreg_core::Term;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_quadratic");
    for n in [100, 1_000, 10_000] {
        let d = regression_data(n, 4, 1);
        let names = predictor_names(4);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let spec = full_quadratic("Y", &refs).unwrap();
        group
            .bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| fit(black_box(&d), &spec).unwrap()));
    }
    group.finish();
}

fn bench_subset(c: &mut Criterion) {
    let d = regression_data(200, 10, 2);
    let pool: Vec<Term> = predictor_names(10).iter().map(|n| Term::linear(n)).collect();
    c.bench_function("best_subset_10_choose_3", |b| b.iter(|| best_subset(black_box(&d), "Y", &pool, 3).unwrap()));
}

fn bench_conditional(c: &mut Criterion) {
    let d = regression_data(500, 3, 3);
    let spec = full_quadratic("Y", &["x1", "x2", "x3"]).unwrap();
    let m = fit(&d, &spec).unwrap();
    let fixed = [("x2".to_string(), 0.1), ("x3".to_string(), -0.2)].into();
    c.bench_function("derive_conditional", |b| b.iter(|| derive(black_box(&m), "x1", &fixed).unwrap()));
}

fn bench_ellipse(c: &mut Criterion) {
    let d = regression_data(10_000, 2, 4);
    c.bench_function("ellipse_10k", |b| b.iter(|| ellipse(black_box(&d), "x1", "x2", 0.95).unwrap()));
}

criterion_group!(benches, bench_fit, bench_subset, bench_conditional, bench_ellipse);
criterion_main!(benches);
