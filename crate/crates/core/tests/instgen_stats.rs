use pmsched::compact::solve_compact;
use pmsched::instgen::{generate, jit_maintenance_heuristic, sample_raw, Complexity, GenConfig, Layout};
use pmsched::model::{validate_schedule, FuncKind};
use pmsched::report::{SolveLimits, SolveStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn kinds_and_coefficients_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 10_000;
    let mut counts = [0usize; 3];
    let mut sum = 0.0;
    let mut n = 0usize;
    for _ in 0..draws {
        let raw = sample_raw(&mut rng, |_| 4);
        counts[match raw.kind {
            FuncKind::Linear => 0,
            FuncKind::Polynomial => 1,
            FuncKind::Exponential => 2,
        }] += 1;
        for c in &raw.coeffs {
            assert!((0.0..=3.0).contains(c));
            sum += c;
            n += 1;
        }
    }
    for c in counts {
        let freq = c as f64 / draws as f64;
        assert!((freq - 1.0 / 3.0).abs() <= 0.02, "kind frequency {freq}");
    }
    let mean = sum / n as f64;
    assert!((mean - 1.5).abs() <= 0.05, "coefficient mean {mean}");
}

#[test]
fn low_complexity_component_counts_and_implication_rate() {
    let mut pairs = 0usize;
    let mut implied = 0usize;
    let mut machines = 0usize;
    let mut seed = 0;
    while machines < 1000 {
        let cfg = GenConfig::new(seed, 2, Layout::Custom(vec![1; 10]), Complexity::Low);
        let inst = generate(&cfg).unwrap();
        for g in &inst.groups {
            let k = g.num_components();
            assert!((1..=3).contains(&k));
            pairs += k * (k - 1) / 2;
            implied += g.implications.len();
            machines += 1;
        }
        seed += 1;
    }
    let rate = implied as f64 / pairs as f64;
    assert!((0.07..=0.13).contains(&rate), "implication rate {rate}");
}

#[test]
fn high_complexity_component_counts() {
    for seed in 0..50 {
        let inst = generate(&GenConfig::new(seed, 2, Layout::TwoGroups10, Complexity::High)).unwrap();
        for g in &inst.groups {
            assert!((3..=7).contains(&g.num_components()));
            assert_eq!(g.multiplicity, 10);
        }
    }
}

#[test]
fn generation_is_deterministic() {
    for layout in [Layout::OneGroup20, Layout::TwoGroups10] {
        let cfg = GenConfig::new(42, 10, layout, Complexity::High);
        assert_eq!(generate(&cfg).unwrap().to_json(), generate(&cfg).unwrap().to_json());
    }
}

/// Demand at 1.2 times the capacity of all machines leaves no room for a
/// machine to stop, so any instance needing maintenance is infeasible; with
/// the expected load above capacity most periods are infeasible outright.
#[test]
fn overload_is_infeasible() {
    for seed in 0..10 {
        let cfg = GenConfig {
            rho: 1.2,
            components: Some((1, 2)),
            ..GenConfig::new(seed, 3, Layout::Custom(vec![2]), Complexity::Low)
        };
        let inst = generate(&cfg).unwrap();
        let out = solve_compact(&inst, &SolveLimits::default()).unwrap();
        assert_eq!(out.report.status, SolveStatus::Infeasible, "seed {seed}");
    }
}

#[test]
fn heuristic_never_beats_the_optimum() {
    let mut compared = 0;
    for seed in 0..30 {
        let cfg = GenConfig {
            rho: 0.2,
            components: Some((1, 1)),
            wear: 3.0,
            ..GenConfig::new(seed, 4, Layout::Custom(vec![1, 1]), Complexity::Low)
        };
        let inst = generate(&cfg).unwrap();
        let Some(h) = jit_maintenance_heuristic(&inst) else { continue };
        assert!(validate_schedule(&inst, &h).unwrap().is_empty());
        let out = solve_compact(&inst, &SolveLimits::default()).unwrap();
        assert_eq!(out.report.status, SolveStatus::Optimal, "seed {seed}");
        assert!(h.cost(&inst) >= out.report.primal_bound.unwrap() - 1e-6, "seed {seed}");
        compared += 1;
    }
    assert!(compared > 10, "only {compared} comparisons");
}
