use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use telemeander::meander::{fdd_density, meander_charfn, meander_density, FddQuery, FrequencyArg};
use telemeander::telegraph::telegraph_density;
use telemeander_bench::{fixtures, interior_grid};

fn densities(c: &mut Criterion) {
    let mut group = c.benchmark_group("density_grid_100");
    for (name, p) in fixtures() {
        let grid = interior_grid(&p, 100);
        group.bench_with_input(BenchmarkId::new("telegraph", name), &grid, |b, g| {
            b.iter(|| g.iter().map(|&x| telegraph_density(&p, black_box(x))).sum::<f64>())
        });
        group.bench_with_input(BenchmarkId::new("meander", name), &grid, |b, g| {
            b.iter(|| g.iter().map(|&x| meander_density(&p, black_box(x))).sum::<f64>())
        });
    }
    group.finish();
}

fn charfn(c: &mut Criterion) {
    let mut group = c.benchmark_group("meander_charfn");
    for (name, p) in fixtures() {
        let gamma = FrequencyArg::new(&p, 0.5 * p.lambda() / p.c()).unwrap();
        group.bench_function(name, |b| b.iter(|| meander_charfn(&p, black_box(gamma))));
    }
    group.finish();
}

fn fdd(c: &mut Criterion) {
    let mut group = c.benchmark_group("fdd_density");
    for (name, p) in fixtures() {
        let t = p.t();
        let ct = p.ct();
        for k in 1..=3usize {
            let times: Vec<f64> = (1..=k).map(|i| t * i as f64 / (k + 1) as f64).collect();
            let points: Vec<f64> = times.iter().map(|s| 0.5 * ct * s / t).collect();
            let q = FddQuery::new(times, points);
            group.bench_with_input(BenchmarkId::new(name, k), &q, |b, q| {
                b.iter(|| fdd_density(&p, black_box(q)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, densities, charfn, fdd);
criterion_main!(benches);
