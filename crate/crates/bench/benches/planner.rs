use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use gco_bench::{cluttered_map, open_map, warmed_planner, TEAM_SIZES};
use gco_core::{build_distance_field, plan, Mode, Vec2};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("gspi_step");
    for n in TEAM_SIZES {
        let (s, p) = open_map(n);
        let planner = warmed_planner(&s, &p, 10);
        group.bench_with_input(BenchmarkId::from_parameter(n), &planner, |b, planner| {
            b.iter_batched(|| planner.clone(), |mut pl| pl.step().unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

fn full_plan(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_plan");
    group.sample_size(10);
    for n in [5, 25] {
        let (s, p) = open_map(n);
        for mode in [Mode::Gspi, Mode::Pibt] {
            group.bench_function(BenchmarkId::new(mode.name(), n), |b| {
                b.iter(|| plan(&p, s.planner_config(mode, 1)).unwrap())
            });
        }
    }
    group.finish();
}

fn distance_field(c: &mut Criterion) {
    let (_, p) = cluttered_map(20);
    c.bench_function("distance_field_pillars", |b| {
        b.iter(|| build_distance_field(p.map.clone(), Vec2::new(5.5, 1.8)).unwrap())
    });
}

criterion_group!(benches, step, full_plan, distance_field);
criterion_main!(benches);
