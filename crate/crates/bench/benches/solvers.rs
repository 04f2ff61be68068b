use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use ddmapd::assignment::{hungarian, CostMatrix};
use ddmapd::decomp::{plan_shelf_trajectories, run, DecompConfig, DependencyGraph};
use ddmapd::generate::{generate, generate_random, GeneratorSpec};
use ddmapd::pp::run_pp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// loose enough that CBS finishes instead of running into the budget
fn config() -> DecompConfig {
    DecompConfig::ivf(8).with_suboptimality(1.8).with_budget(Duration::from_secs(1))
}

fn hungarian_bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows: Vec<Vec<i64>> = (0..32).map(|_| (0..64).map(|_| rng.gen_range(0..100)).collect()).collect();
    let costs = CostMatrix::from_rows(&rows);
    c.bench_function("hungarian 32x64", |b| b.iter(|| hungarian(black_box(&costs))));
}

fn trajectories_bench(c: &mut Criterion) {
    let inst = generate_random(&GeneratorSpec::new(8, 0.4, 4, 0)).unwrap();
    c.bench_function("shelf trajectories 8x8 40%", |b| {
        b.iter(|| plan_shelf_trajectories(black_box(&inst), &config(), false).unwrap())
    });
    let (set, _) = plan_shelf_trajectories(&inst, &config(), false).unwrap();
    let paths = set.paths();
    c.bench_function("dependency graph 8x8 40%", |b| b.iter(|| DependencyGraph::build(black_box(&paths))));
}

fn planners_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("planners");
    group.sample_size(10);
    let inst = generate_random(&GeneratorSpec::new(8, 0.4, 4, 0)).unwrap();
    group.bench_function("nivf 8x8", |b| b.iter(|| run(black_box(&inst), &DecompConfig { ivf_horizon: 0, ..config() }).unwrap()));
    group.bench_function("ivf 8x8", |b| b.iter(|| run(black_box(&inst), &config()).unwrap()));
    let wf = generate(&GeneratorSpec::new(12, 0.2, 4, 1).well_formed()).ok();
    if let Some(wf) = wf {
        group.bench_function("pp 12x12 well-formed", |b| b.iter(|| run_pp(black_box(&wf), &config())));
    }
    group.finish();
}

criterion_group!(benches, hungarian_bench, trajectories_bench, planners_bench);
criterion_main!(benches);
