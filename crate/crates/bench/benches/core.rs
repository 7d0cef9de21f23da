use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use salient_bench::fixture;
use salient_core::model::Design;
use salient_core::{fit, model_transitivity_report, theorem1_report, FitConfig, SelectionSpec};

fn objective(c: &mut Criterion) {
    let mut g = c.benchmark_group("objective");
    for d in [5, 20] {
        let f = fixture(d, 100, 20_000, SelectionSpec::TopT { t: 2 }, 1);
        let design = Design::new(&f.u, &f.sel, &f.data).unwrap();
        let w = f.w_star.as_slice().to_vec();
        g.bench_with_input(BenchmarkId::new("value", d), &d, |b, _| {
            b.iter(|| design.value(black_box(&w), 0.0))
        });
        g.bench_with_input(BenchmarkId::new("gradient", d), &d, |b, _| {
            b.iter(|| design.evaluate(black_box(&w), 0.0, false))
        });
        g.bench_with_input(BenchmarkId::new("hessian", d), &d, |b, _| {
            b.iter(|| design.evaluate(black_box(&w), 0.0, true))
        });
    }
    g.finish();
}

fn estimation(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    g.sample_size(20);
    for m in [1_000, 16_000] {
        let f = fixture(5, 40, m, SelectionSpec::Full, 2);
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| fit(&f.u, &f.sel, &f.data, &FitConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn certificates(c: &mut Criterion) {
    let mut g = c.benchmark_group("theory");
    g.sample_size(10);
    for n in [20, 60] {
        let f = fixture(5, n, 1, SelectionSpec::TopT { t: 1 }, 3);
        g.bench_with_input(BenchmarkId::new("theorem1", n), &n, |b, _| {
            b.iter(|| theorem1_report(&f.u, &f.sel, Some(&f.w_star), 0.1).unwrap())
        });
    }
    g.finish();
}

fn transitivity(c: &mut Criterion) {
    let mut g = c.benchmark_group("transitivity");
    g.sample_size(10);
    let f = fixture(10, 100, 1, SelectionSpec::TopT { t: 1 }, 4);
    g.bench_function("model_n100", |b| {
        b.iter(|| model_transitivity_report(&f.u, &f.w_star, &f.sel).unwrap())
    });
    g.finish();
}

criterion_group!(benches, objective, estimation, certificates, transitivity);
criterion_main!(benches);
