use std::hint::black_box;

use arbor_bench::Fixture;
use arbor_core::geometry::count_crossings;
use arbor_core::{prt_improve, rt_improve, LayoutParams, SpatialGrid};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn one_iteration() -> LayoutParams {
    LayoutParams { iterations: 1, ..LayoutParams::default() }
}

fn improvement(c: &mut Criterion) {
    let mut group = c.benchmark_group("iteration");
    group.sample_size(10);
    for n in [1000, 4000] {
        let f = Fixture::random(n, 1);
        group.bench_with_input(BenchmarkId::new("prt", n), &f, |b, f| {
            b.iter(|| prt_improve(&f.layout, &f.tree, &f.geometry, &f.lengths, &one_iteration()).unwrap())
        });
    }
    let f = Fixture::random(1000, 1);
    group.bench_with_input(BenchmarkId::new("rt", 1000), &f, |b, f| {
        b.iter(|| rt_improve(&f.layout, &f.tree, &f.geometry, &f.lengths, &one_iteration()).unwrap())
    });
    group.finish();
}

fn crossings(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_crossings");
    for n in [1000, 8000] {
        let f = Fixture::random(n, 2);
        let grid = SpatialGrid::build(
            &f.tree,
            &f.layout,
            &f.geometry,
            SpatialGrid::default_cell_size(&f.lengths, &f.geometry),
        );
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| count_crossings(black_box(&f.layout), &f.tree, &grid))
        });
    }
    group.finish();
}

criterion_group!(benches, improvement, crossings);
criterion_main!(benches);
