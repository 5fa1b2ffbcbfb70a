use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmsched::branch_price::{solve_bp, BpConfig};
use pmsched::compact::solve_compact;
use pmsched::instgen::{generate, Complexity, GenConfig, Layout};
use pmsched::model::Instance;
use pmsched::report::SolveLimits;
use std::time::Duration;

/// Several small groups, so each pricing round has independent problems to
/// spread over threads.
fn multi_group(seed: u64) -> Instance {
    generate(&GenConfig {
        rho: 0.3,
        components: Some((1, 2)),
        wear: 2.0,
        ..GenConfig::new(seed, 4, Layout::Custom(vec![2, 2, 2, 2]), Complexity::Low)
    })
    .expect("valid config")
}

fn limits() -> SolveLimits {
    SolveLimits {
        time_limit: Some(Duration::from_secs(30)),
        ..SolveLimits::default()
    }
}

fn branch_and_price(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_and_price");
    group.sample_size(10);
    for seed in [0u64, 1] {
        let inst = multi_group(seed);
        for parallel in [false, true] {
            let cfg = BpConfig {
                parallel,
                ..BpConfig::default()
            };
            let name = if parallel { "parallel" } else { "sequential" };
            group.bench_with_input(BenchmarkId::new(name, seed), &inst, |b, inst| {
                b.iter(|| solve_bp(inst, &limits(), &cfg).expect("solve"))
            });
        }
    }
    group.finish();
}

fn compact(c: &mut Criterion) {
    let mut group = c.benchmark_group("compact");
    group.sample_size(10);
    let inst = generate(&GenConfig {
        rho: 0.2,
        components: Some((1, 1)),
        wear: 3.0,
        ..GenConfig::new(13, 4, Layout::Custom(vec![1, 1]), Complexity::Low)
    })
    .expect("valid config");
    group.bench_function("two_machines", |b| b.iter(|| solve_compact(&inst, &limits()).expect("solve")));
    group.finish();
}

criterion_group!(benches, branch_and_price, compact);
criterion_main!(benches);
