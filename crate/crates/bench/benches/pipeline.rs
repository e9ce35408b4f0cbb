use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tempsv_bench::{january_hdd, synthetic_series, JAN_2019};
use tempsv_core::charfn::charfn_cat;
use tempsv_core::pricing::{hdd_option_via_cat, mc_price, price_with_control_variate, GridConfig};
use tempsv_core::{calibrate, simulate_paths, CalibrationConfig, McConfig, ModelParams};

fn bench_calibrate(c: &mut Criterion) {
    let series = synthetic_series(40, 1);
    c.bench_function("calibrate_40y", |b| {
        b.iter(|| calibrate(black_box(&series), &CalibrationConfig::default()).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let p = ModelParams::paris();
    let mut g = c.benchmark_group("simulate_60d");
    for n in [1_000usize, 10_000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| simulate_paths(&p, (0.0, p.sigma2(14205.0)), 14205.0, 60.0, 1.0, n, 7).unwrap())
        });
    }
    g.finish();
}

fn bench_charfn(c: &mut Criterion) {
    let p = ModelParams::paris();
    let (t1, t2) = JAN_2019;
    let state = (0.0, p.sigma2(t1 - 30.0));
    let mut g = c.benchmark_group("charfn_cat");
    for delta in [0.1, 0.01] {
        g.bench_with_input(BenchmarkId::from_parameter(delta), &delta, |b, &d| {
            b.iter(|| charfn_cat(t1 - 30.0, t1, t2, black_box(0.05), state, &p, d).unwrap())
        });
    }
    g.finish();
}

fn bench_pricing(c: &mut Criterion) {
    let p = ModelParams::paris();
    let spec = january_hdd();
    let t0 = JAN_2019.0 - 30.0;
    let state = (0.0, p.sigma2(t0));
    let mut g = c.benchmark_group("price_jan_hdd");
    g.sample_size(10);
    g.bench_function("fft", |b| b.iter(|| hdd_option_via_cat(&spec, t0, state, &p, &GridConfig::default()).unwrap()));
    let mc = McConfig::new(t0, 10_000, 3);
    g.bench_function("mc_10k", |b| {
        b.iter(|| {
            let paths = mc.simulate(&p, &spec.index).unwrap();
            mc_price(&paths, &spec).unwrap()
        })
    });
    g.bench_function("cv_10k", |b| {
        b.iter(|| price_with_control_variate(&p, &spec, &mc, &GridConfig::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_calibrate, bench_simulate, bench_charfn, bench_pricing);
criterion_main!(benches);
