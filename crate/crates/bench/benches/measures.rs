use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fdc_bench::{fixture, EXPRESSION};
use fdc_core::ale::build_ale_model;
use fdc_core::measures::{compute_nf, fit_numeric_points, NfConfig};
use fdc_core::predict::parse_expression;
use fdc_core::{pareto_front, Rng};

fn ale(c: &mut Criterion) {
    let mut group = c.benchmark_group("ale");
    for n in [500, 2000] {
        let ds = fixture(n, 5, 1);
        let model = parse_expression(EXPRESSION, &ds.schema()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| build_ale_model(&model, black_box(ds), 100).unwrap())
        });
    }
    group.finish();
}

fn nf(c: &mut Criterion) {
    let ds = fixture(2000, 5, 2);
    let model = parse_expression(EXPRESSION, &ds.schema()).unwrap();
    let config = NfConfig::default();
    c.bench_function("nf/2000", |b| b.iter(|| compute_nf(&model, black_box(&ds), &config).unwrap()));
}

fn segmented(c: &mut Criterion) {
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 6.0 - 3.0).collect();
    let a: Vec<f64> = x.iter().map(|v| v.sin() + 0.3 * v.abs()).collect();
    let candidates: Vec<f64> = (1..100).map(|k| k as f64 * 0.06 - 3.0).collect();
    c.bench_function("segmented/2000x100", |b| {
        b.iter(|| fit_numeric_points(0, black_box(&x), black_box(&a), &candidates, 0.001, 5))
    });
}

fn pareto(c: &mut Criterion) {
    let mut rng = Rng::new(3);
    let points: Vec<[f64; 4]> = (0..1000)
        .map(|_| [rng.unit(), rng.index(10) as f64, 1.0 + 4.0 * rng.unit(), rng.unit()])
        .collect();
    c.bench_function("pareto/1000", |b| b.iter(|| pareto_front(black_box(&points))));
}

criterion_group!(benches, ale, nf, segmented, pareto);
criterion_main!(benches);
