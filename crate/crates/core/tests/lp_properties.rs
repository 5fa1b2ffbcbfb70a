mod common;

use common::{toy_lp, vertex_enumeration};
use pmsched::lp::{farkas_margin, relation_bounds, solve_lp, LpProblem, LpStatus, Relation, Simplex};
use proptest::prelude::*;

#[test]
fn toy_relaxation_matches_vertex_oracle() {
    let p = toy_lp();
    let oracle = vertex_enumeration(&p).unwrap();
    assert!((oracle - 20.0 / 3.0).abs() < 1e-9);
    let s = solve_lp(&p, 10_000).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - oracle).abs() < 1e-6);
}

#[test]
fn contradictory_rows_certified() {
    let mut p = LpProblem::default();
    let x = p.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    p.add_row(vec![(x, 1.0)], Relation::Ge, 2.0);
    p.add_row(vec![(x, 1.0)], Relation::Le, 1.0);
    let s = solve_lp(&p, 1000).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
    let ray = s.farkas_ray.unwrap();
    assert!(farkas_margin(&p, &ray) > 1e-9);
}

/// Dual objective `sum of row duals times the active row bound + reduced
/// costs times the active column bound`.
fn dual_objective(p: &LpProblem, duals: &[f64], reduced: &[f64]) -> f64 {
    let mut v = 0.0;
    for (r, y) in p.rows.iter().zip(duals) {
        if y.abs() <= 1e-12 {
            continue;
        }
        let (lo, hi) = relation_bounds(r.relation, r.rhs);
        v += if *y >= 0.0 { y * lo } else { y * hi };
    }
    for (j, d) in reduced.iter().enumerate() {
        if d.abs() > 1e-12 {
            v += if *d >= 0.0 { d * p.lower[j] } else { d * p.upper[j] };
        }
    }
    v
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)]
}

/// Small bounded LPs with integer data.
fn small_lp() -> impl Strategy<Value = LpProblem> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5i32..=5, n),
            prop::collection::vec((prop::collection::vec(-3i32..=3, n), relation(), -6i32..=6), m),
            prop::collection::vec((-3i32..=0, 0i32..=3), n),
        )
            .prop_map(move |(c, rows, bounds)| {
                let mut p = LpProblem::default();
                for (j, (lo, hi)) in bounds.into_iter().enumerate() {
                    p.add_var(c[j] as f64, lo as f64, hi as f64);
                }
                for (coeffs, rel, rhs) in rows {
                    let coeffs: Vec<(usize, f64)> = coeffs
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, a)| a != 0)
                        .map(|(j, a)| (j, a as f64))
                        .collect();
                    p.add_row(coeffs, rel, rhs as f64);
                }
                p
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_agrees_with_vertex_enumeration(p in small_lp()) {
        let s = solve_lp(&p, 10_000).unwrap();
        match vertex_enumeration(&p) {
            Some(v) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - v).abs() < 1e-6, "simplex {} oracle {}", s.objective, v);
            }
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn strong_duality(p in small_lp()) {
        let s = solve_lp(&p, 10_000).unwrap();
        if s.status == LpStatus::Optimal {
            let d = dual_objective(&p, &s.duals, &s.reduced_costs);
            prop_assert!((d - s.objective).abs() <= 1e-6 * (1.0 + s.objective.abs()), "primal {} dual {}", s.objective, d);
        }
    }

    #[test]
    fn farkas_rays_certify(p in small_lp()) {
        let s = solve_lp(&p, 10_000).unwrap();
        if s.status == LpStatus::Infeasible {
            let ray = s.farkas_ray.expect("infeasible solve carries a ray");
            prop_assert!(farkas_margin(&p, &ray) > 1e-9);
        }
    }

    /// Adding a row to a solved problem and re-solving warm gives the same
    /// answer as solving the extended problem from scratch.
    #[test]
    fn warm_row_addition(p in small_lp(), extra in (prop::collection::vec(-3i32..=3, 3), -4i32..=4)) {
        let mut warm = Simplex::new(&p).unwrap();
        let _ = warm.solve(10_000).unwrap();
        let coeffs: Vec<(usize, f64)> = extra.0.iter().take(p.num_vars()).enumerate()
            .filter(|&(_, &a)| a != 0).map(|(j, &a)| (j, a as f64)).collect();
        warm.add_row(&coeffs, Relation::Le, extra.1 as f64);
        let w = warm.solve(10_000).unwrap();
        let mut q = p.clone();
        q.add_row(coeffs, Relation::Le, extra.1 as f64);
        let c = solve_lp(&q, 10_000).unwrap();
        prop_assert_eq!(w.status, c.status);
        if c.status == LpStatus::Optimal {
            prop_assert!((w.objective - c.objective).abs() < 1e-6);
        }
    }
}
