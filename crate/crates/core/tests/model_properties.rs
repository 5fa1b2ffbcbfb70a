use pmsched::instgen::{generate, Complexity, GenConfig, Layout};
use pmsched::model::{validate_schedule, Instance, MachineSchedule, Schedule};
use proptest::prelude::*;

fn instance(seed: u64) -> Instance {
    let cfg = GenConfig::new(seed, 5, Layout::Custom(vec![1, 1]), Complexity::High);
    generate(&cfg).unwrap()
}

/// A point of component `k`'s function box at fractions `t` of each bound.
fn point(upper: &[f64], t: &[f64]) -> Vec<f64> {
    upper.iter().zip(t.iter().cycle()).map(|(u, s)| u * s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_match_central_differences(seed in 0u64..500, t in prop::collection::vec(0.05f64..0.95, 9)) {
        let inst = instance(seed);
        for g in &inst.groups {
            for k in 0..g.num_components() {
                let upper = g.func_box(k);
                let u = point(&upper, &t);
                for f in [&g.components[k].f, &g.components[k].g] {
                    let mut grad = vec![0.0; u.len()];
                    f.grad_in(&u, &upper, &mut grad);
                    for i in 0..u.len() {
                        let h = 1e-6 * upper[i].max(1.0);
                        let mut a = u.clone();
                        let mut b = u.clone();
                        a[i] += h;
                        b[i] -= h;
                        let fd = (f.eval_in(&a, &upper) - f.eval_in(&b, &upper)) / (2.0 * h);
                        prop_assert!((fd - grad[i]).abs() <= 1e-4 * (1.0 + grad[i].abs()),
                            "slot {} analytic {} numeric {}", i, grad[i], fd);
                    }
                }
            }
        }
    }

    #[test]
    fn functions_concave_and_monotone(seed in 0u64..500,
                                      a in prop::collection::vec(0.0f64..=1.0, 9),
                                      b in prop::collection::vec(0.0f64..=1.0, 9),
                                      w in 0.0f64..=1.0) {
        let inst = instance(seed);
        for g in &inst.groups {
            for k in 0..g.num_components() {
                let upper = g.func_box(k);
                let (pa, pb) = (point(&upper, &a), point(&upper, &b));
                let mid: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| w * x + (1.0 - w) * y).collect();
                for f in [&g.components[k].f, &g.components[k].g] {
                    let lhs = f.eval_in(&mid, &upper);
                    let rhs = w * f.eval_in(&pa, &upper) + (1.0 - w) * f.eval_in(&pb, &upper);
                    prop_assert!(lhs >= rhs - 1e-9, "concavity: {} < {}", lhs, rhs);
                    // Raising a condition never lowers the value; raising
                    // production never raises it.
                    let mut up = pa.clone();
                    up[0] = pa[0].max(pb[0]);
                    up[2..].iter_mut().zip(&pb[2..]).for_each(|(x, y)| *x = x.max(*y));
                    prop_assert!(f.eval_in(&up, &upper) >= f.eval_in(&pa, &upper) - 1e-9);
                    let mut more = pa.clone();
                    more[1] = pa[1].max(pb[1]);
                    prop_assert!(f.eval_in(&more, &upper) <= f.eval_in(&pa, &upper) + 1e-9);
                }
            }
        }
    }

    /// A schedule built from the best condition trajectory of any maintenance
    /// plan passes the degradation and bound rows it was derived from.
    #[test]
    fn trajectory_respects_degradation(seed in 0u64..200, bits in prop::collection::vec(0u8..=1, 20)) {
        let inst = instance(seed);
        let machines: Vec<MachineSchedule> = inst.groups.iter().enumerate().map(|(z, g)| {
            let x: Vec<Vec<u8>> = (0..g.num_components())
                .map(|k| (0..inst.periods).map(|t| bits[(k * inst.periods + t) % bits.len()]).collect())
                .collect();
            let y = vec![0.0; inst.periods];
            let r = g.condition_trajectory(&x, &y);
            MachineSchedule { group: z, x, y, r }
        }).collect();
        let v = validate_schedule(&inst, &Schedule::new(machines)).unwrap();
        use pmsched::model::ConstraintFamily::*;
        prop_assert!(v.iter().all(|e| !matches!(e.family, Degradation | Binary | Downtime)), "{:?}", v);
    }
}

/// For every component, the degradation row relaxed by big-M admits the
/// maximum condition over a 50-point grid on each axis of its box.
#[test]
fn big_m_relaxes_every_point() {
    for seed in 0..40 {
        let inst = instance(seed);
        for g in &inst.groups {
            for k in 0..g.num_components() {
                let upper = g.func_box(k);
                let m = g.big_m(k);
                let r = g.components[k].max_condition;
                let f = &g.components[k].f;
                // Grid on prev and production, peers at the corners, since f
                // is monotone in the peers.
                for peers_low in [true, false] {
                    for i in 0..50 {
                        for j in 0..50 {
                            let mut u: Vec<f64> = upper.clone();
                            u[0] = upper[0] * i as f64 / 49.0;
                            u[1] = upper[1] * j as f64 / 49.0;
                            if peers_low {
                                u[2..].iter_mut().for_each(|x| *x = 0.0);
                            }
                            assert!(f.eval_in(&u, &upper) + m >= r - 1e-9, "seed {seed} component {k}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn json_roundtrip_is_lossless() {
    for seed in 0..20 {
        let inst = instance(seed);
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
    }
}
