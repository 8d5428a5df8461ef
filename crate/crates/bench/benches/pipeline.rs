use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use grassnav_bench::{corridor_scenario, Fixture};
use grassnav_core::layers::{InflationConfig, InflationLayer};
use grassnav_core::{navsim, CellIndex, CostGrid, Point2, FREE, LETHAL};

fn stages(c: &mut Criterion) {
    let mut f = Fixture::corridor();
    let clouds = f.clouds();
    let master = f.update(&clouds);

    c.bench_function("mask_project_transform", |b| {
        b.iter(|| black_box(f.clouds()))
    });
    c.bench_function("plan_toward", |b| b.iter(|| black_box(f.plan(&master))));
    c.bench_function("stack_update", |b| b.iter(|| black_box(f.update(&clouds))));
    c.bench_function("pipeline_tick", |b| b.iter(|| black_box(f.tick())));
}

fn inflation(c: &mut Criterion) {
    let mut grid = CostGrid::new(200, 200, 0.05, Point2::new(0.0, 0.0), FREE).unwrap();
    // a wall and a scatter of isolated returns
    for row in 20..180 {
        grid.set(CellIndex::new(100, row), LETHAL).unwrap();
    }
    for i in 0..200 {
        grid.set(CellIndex::new((i * 37) % 200, (i * 91) % 200), LETHAL)
            .unwrap();
    }
    let mut layer = InflationLayer::new(InflationConfig::default()).unwrap();
    c.bench_function("inflation_200x200", |b| {
        b.iter(|| {
            let mut g = grid.clone();
            layer.inflation_update(&mut g).unwrap();
            black_box(g)
        })
    });
}

fn full_run(c: &mut Criterion) {
    let s = corridor_scenario();
    let mut group = c.benchmark_group("navsim");
    group.sample_size(10);
    group.bench_function("run_grass_corridor", |b| {
        b.iter(|| black_box(navsim::run(&s).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, stages, inflation, full_run);
criterion_main!(benches);
