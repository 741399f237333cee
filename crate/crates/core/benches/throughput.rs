use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::BigRational;
use valley_core::model::{ModelParams, Side};
use valley_core::nonpert::{find_np_levels, large_order_bridge};
use valley_core::series::{compute_series_with, SeriesOptions, DEFAULT_CAP};
use valley_core::spectrum::spectra;
use valley_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn series_recursion(c: &mut Criterion) {
    let mut group = c.benchmark_group("series_order_120");
    group.sample_size(10);
    let eps = BigRational::new(5.into(), 2.into());
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| compute_series_with(black_box(&eps), 1, Side::Minus, 120, &SeriesOptions { cap: DEFAULT_CAP, exec }).unwrap())
        });
    }
    group.finish();
}

fn scenario_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("series_sweep_8_levels");
    group.sample_size(10);
    let eps: Vec<BigRational> = (1..=8).map(|k| BigRational::new((2 * k - 1).into(), 4.into())).collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec.map(&eps, |e| compute_series_with(e, 0, Side::Minus, 60, &SeriesOptions { cap: DEFAULT_CAP, exec: Execution::Sequential }).unwrap())
            })
        });
    }
    group.finish();
}

fn root_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("np_roots");
    let params = ModelParams::from_g2(0.05, 0.4).unwrap();
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 6), &params, |b, p| b.iter(|| find_np_levels(p, (-1.0, 2.0), 6, exec)));
    }
    group.finish();
}

fn bridge_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("bridge_orders");
    let orders: Vec<usize> = (10..=80).step_by(10).collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| exec.map(&orders, |&m| large_order_bridge(0.4, 0, Side::Minus, m, 128).unwrap())));
    }
    group.finish();
}

fn spectrum_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum_couplings");
    group.sample_size(10);
    let params: Vec<ModelParams> = [0.08, 0.06, 0.05, 0.04].iter().map(|g2| ModelParams::from_g2(*g2, 2.0).unwrap()).collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| spectra(black_box(&params), 2, 1e-12, exec)));
    }
    group.finish();
}

criterion_group!(benches, series_recursion, scenario_sweep, root_search, bridge_batch, spectrum_batch);
criterion_main!(benches);
