//! Test oracles written independently of the solvers.
#![allow(dead_code)]

use pmsched::instgen::{generate, Complexity, GenConfig, Layout};
use pmsched::lp::{LpProblem, Relation};
use pmsched::model::{Instance, MachineGroupSpec};

pub const TOL: f64 = 1e-6;
/// Production splits per machine and period in the oracle's grid.
pub const GRID_STEPS: usize = 1000;

/// Every maintenance pattern `[component][period]` of one machine that
/// respects durations, implications and the late-start rule, with its cost.
pub fn machine_patterns(group: &MachineGroupSpec, periods: usize) -> Vec<(Vec<Vec<u8>>, f64)> {
    let kk = group.num_components();
    let bits = kk * periods;
    assert!(bits <= 16, "pattern enumeration too large");
    let mut out = Vec::new();
    for mask in 0u32..(1 << bits) {
        let x: Vec<Vec<u8>> = (0..kk)
            .map(|k| (0..periods).map(|t| ((mask >> (k * periods + t)) & 1) as u8).collect())
            .collect();
        if pattern_ok(group, &x) {
            let cost = (0..kk)
                .map(|k| group.components[k].cost * x[k].iter().map(|&v| v as f64).sum::<f64>())
                .sum();
            out.push((x, cost));
        }
    }
    out
}

fn pattern_ok(group: &MachineGroupSpec, x: &[Vec<u8>]) -> bool {
    let tt = x[0].len();
    for (k, c) in group.components.iter().enumerate() {
        let d = c.duration;
        for t in 0..tt {
            let started = x[k][t] == 1 && (t == 0 || x[k][t - 1] == 0);
            if started && ((t + 1)..=(t + d).min(tt - 1)).any(|i| x[k][i] == 0) {
                return false;
            }
            // A start after the last period that still completes in time.
            let last_start = tt as isize - d as isize - 1;
            if (t as isize) > last_start {
                let anchor = if last_start < 0 { 0 } else { x[k][last_start as usize] };
                if x[k][t] > anchor {
                    return false;
                }
            }
        }
    }
    for &[a, b] in &group.implications {
        if (0..tt).any(|t| x[a][t] > x[b][t]) {
            return false;
        }
    }
    true
}

struct MachinePlan<'a> {
    group: &'a MachineGroupSpec,
    x: &'a [Vec<u8>],
}

impl MachinePlan<'_> {
    fn down(&self, t: usize) -> bool {
        self.x.iter().any(|row| row[t] == 1)
    }

    /// Best conditions after producing `y` in period `t`, if no component
    /// fails or limits production below `y`.
    fn step(&self, t: usize, prev: &[f64], y: f64) -> Option<Vec<f64>> {
        let g = self.group;
        let mut cur = Vec::with_capacity(prev.len());
        for (k, c) in g.components.iter().enumerate() {
            let r = if self.x[k][t] == 1 {
                c.max_condition
            } else {
                g.degrade(k, prev, y).min(c.max_condition)
            };
            if r < -TOL || y > g.limit(k, r) + TOL {
                return None;
            }
            cur.push(r);
        }
        if y > g.q_min() + TOL {
            return None;
        }
        Some(cur)
    }
}

/// Keeps the states not dominated componentwise by another state.
fn pareto(mut states: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    states.sort_by(|a, b| {
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        sb.partial_cmp(&sa).unwrap()
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for s in states {
        let dominated = kept
            .iter()
            .any(|k| k.iter().zip(&s).all(|(a, b)| *a >= *b - 1e-12));
        if !dominated {
            kept.push(s);
        }
    }
    kept
}

/// Two-dimensional special case with a sort-and-sweep.
fn pareto2(mut states: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    states.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap().then(b[1].partial_cmp(&a[1]).unwrap()));
    let mut kept = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for s in states {
        if s[1] > best + 1e-12 {
            best = s[1];
            kept.push(s);
        }
    }
    kept
}

/// Whether the machines can meet demand with the given patterns. Production
/// of two running machines is split on a grid of `Q/GRID_STEPS` plus the two
/// split points where one machine runs at its bound.
fn plans_feasible(inst: &Instance, plans: &[MachinePlan]) -> bool {
    let dims: Vec<usize> = plans.iter().map(|p| p.group.num_components()).collect();
    let init: Vec<f64> = plans
        .iter()
        .flat_map(|p| p.group.components.iter().map(|c| c.max_condition))
        .collect();
    let mut states = vec![init];
    for t in 0..inst.periods {
        let e = inst.demand[t];
        let running: Vec<usize> = (0..plans.len()).filter(|&i| !plans[i].down(t)).collect();
        let splits: Vec<Vec<f64>> = match running.len() {
            0 => {
                if e > TOL {
                    return false;
                }
                vec![vec![0.0; plans.len()]]
            }
            1 => {
                let mut y = vec![0.0; plans.len()];
                y[running[0]] = e;
                vec![y]
            }
            2 => {
                let (a, b) = (running[0], running[1]);
                let qa = plans[a].group.q_min();
                let qb = plans[b].group.q_min();
                let lo = (e - qb).max(0.0);
                let hi = e.min(qa);
                if lo > hi + TOL {
                    return false;
                }
                let step = qa / GRID_STEPS as f64;
                let mut ys: Vec<f64> = (0..=GRID_STEPS)
                    .map(|i| i as f64 * step)
                    .filter(|&v| v >= lo && v <= hi)
                    .collect();
                ys.push(lo);
                ys.push(hi.max(lo));
                ys.into_iter()
                    .map(|ya| {
                        let mut y = vec![0.0; plans.len()];
                        y[a] = ya;
                        y[b] = (e - ya).max(0.0);
                        y
                    })
                    .collect()
            }
            _ => panic!("oracle handles at most two machines"),
        };
        let mut next = Vec::new();
        for s in &states {
            'split: for y in &splits {
                let mut ns = Vec::with_capacity(s.len());
                let mut off = 0;
                for (i, p) in plans.iter().enumerate() {
                    let prev = &s[off..off + dims[i]];
                    match p.step(t, prev, y[i]) {
                        Some(c) => ns.extend(c),
                        None => continue 'split,
                    }
                    off += dims[i];
                }
                next.push(ns);
            }
        }
        if next.is_empty() {
            return false;
        }
        states = if next[0].len() == 2 { pareto2(next) } else { pareto(next) };
    }
    true
}

/// Minimum schedule cost by exhaustive search, `None` when infeasible.
/// Handles up to two machines in total.
pub fn enumerate_optimum(inst: &Instance) -> Option<f64> {
    let tt = inst.periods;
    let machines: Vec<usize> = inst
        .groups
        .iter()
        .enumerate()
        .flat_map(|(z, g)| std::iter::repeat_n(z, g.multiplicity))
        .collect();
    assert!(machines.len() <= 2, "oracle handles at most two machines");
    let patterns: Vec<Vec<(Vec<Vec<u8>>, f64)>> =
        inst.groups.iter().map(|g| machine_patterns(g, tt)).collect();
    // Pattern index per machine; identical machines take non-decreasing indices.
    let mut combos: Vec<(f64, Vec<usize>)> = Vec::new();
    match machines.len() {
        1 => {
            for (i, p) in patterns[machines[0]].iter().enumerate() {
                combos.push((p.1, vec![i]));
            }
        }
        2 => {
            let same = machines[0] == machines[1];
            for (i, p) in patterns[machines[0]].iter().enumerate() {
                for (j, q) in patterns[machines[1]].iter().enumerate() {
                    if same && j < i {
                        continue;
                    }
                    combos.push((p.1 + q.1, vec![i, j]));
                }
            }
        }
        _ => return None,
    }
    combos.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (cost, idx) in combos {
        let plans: Vec<MachinePlan> = idx
            .iter()
            .zip(&machines)
            .map(|(&i, &z)| MachinePlan {
                group: &inst.groups[z],
                x: &patterns[z][i].0,
            })
            .collect();
        if plans_feasible(inst, &plans) {
            return Some(cost);
        }
    }
    None
}

/// Generator shapes of the tiny corpus: layout, component range, load,
/// wear. Two machines are needed for positive costs, since a lone machine
/// cannot stop while demand is positive.
type Shape = (&'static [usize], (usize, usize), f64, f64);

const TINY_SHAPES: [Shape; 5] = [
    (&[2], (1, 1), 0.2, 3.0),
    (&[1, 1], (1, 1), 0.2, 3.0),
    (&[1, 1], (1, 1), 0.2, 4.0),
    (&[2], (1, 1), 0.2, 4.0),
    (&[1], (1, 2), 0.35, 3.0),
];

/// `(shape, seed, optimum)` of the tiny corpus; optima frozen from
/// [`enumerate_optimum`]. Seeds were picked for a mix of positive-cost,
/// zero-cost and infeasible instances.
pub const TINY_CORPUS: [(usize, u64, Option<f64>); 50] = [
    (0, 6, Some(24.0)),
    (0, 36, Some(28.0)),
    (0, 47, Some(32.0)),
    (1, 13, Some(16.0)),
    (1, 25, Some(3.0)),
    (1, 31, Some(6.0)),
    (1, 35, Some(8.0)),
    (1, 37, Some(9.0)),
    (1, 38, Some(20.0)),
    (1, 51, Some(2.0)),
    (2, 0, Some(18.0)),
    (2, 3, Some(30.0)),
    (2, 7, Some(9.0)),
    (2, 10, Some(12.0)),
    (2, 15, Some(34.0)),
    (2, 18, Some(16.0)),
    (2, 35, Some(8.0)),
    (2, 36, Some(14.0)),
    (2, 44, Some(12.0)),
    (2, 57, Some(18.0)),
    (3, 6, Some(24.0)),
    (3, 10, Some(24.0)),
    (3, 15, Some(32.0)),
    (3, 18, Some(32.0)),
    (3, 36, Some(28.0)),
    (1, 3, Some(0.0)),
    (1, 7, Some(0.0)),
    (1, 26, Some(0.0)),
    (1, 36, Some(0.0)),
    (1, 41, Some(0.0)),
    (1, 48, Some(0.0)),
    (2, 23, Some(0.0)),
    (2, 26, Some(0.0)),
    (2, 41, Some(0.0)),
    (2, 48, Some(0.0)),
    (3, 23, Some(0.0)),
    (3, 37, Some(0.0)),
    (4, 1000, Some(0.0)),
    (4, 1003, Some(0.0)),
    (4, 1008, Some(0.0)),
    (0, 25, None),
    (1, 42, None),
    (2, 31, None),
    (3, 11, None),
    (3, 14, None),
    (3, 20, None),
    (3, 25, None),
    (3, 42, None),
    (3, 51, None),
    (3, 55, None),
];

pub fn tiny_instance(shape: usize, seed: u64) -> Instance {
    let (layout, comps, rho, wear) = TINY_SHAPES[shape];
    let cfg = GenConfig {
        rho,
        components: Some(comps),
        wear,
        ..GenConfig::new(seed, 4, Layout::Custom(layout.to_vec()), Complexity::Low)
    };
    generate(&cfg).expect("tiny corpus config is valid")
}

/// The 50 tiny instances with their frozen optima.
pub fn tiny_corpus() -> Vec<(Instance, Option<f64>)> {
    TINY_CORPUS
        .iter()
        .map(|&(shape, seed, opt)| (tiny_instance(shape, seed), opt))
        .collect()
}

/// Optimal value of a small LP by enumerating basic solutions, `None` when
/// infeasible. Assumes finite bounds on every variable.
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    // Each candidate active constraint as (coefficients, rhs).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        planes.push((a, r.rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push((a.clone(), p.lower[j]));
        planes.push((a, p.upper[j]));
    }
    let feasible = |x: &[f64]| {
        (0..n).all(|j| x[j] >= p.lower[j] - 1e-9 && x[j] <= p.upper[j] + 1e-9)
            && p.rows.iter().all(|r| {
                let lhs: f64 = r.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                match r.relation {
                    Relation::Le => lhs <= r.rhs + 1e-9,
                    Relation::Ge => lhs >= r.rhs - 1e-9,
                    Relation::Eq => (lhs - r.rhs).abs() <= 1e-9,
                }
            })
    };
    let mut best: Option<f64> = None;
    let mut choose = vec![0usize; n];
    fn next_subset(c: &mut [usize], m: usize) -> bool {
        let n = c.len();
        for i in (0..n).rev() {
            if c[i] < m - n + i {
                c[i] += 1;
                for j in i + 1..n {
                    c[j] = c[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, c) in choose.iter_mut().enumerate() {
        *c = i;
    }
    loop {
        let a: Vec<Vec<f64>> = choose.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = choose.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            if feasible(&x) {
                let v: f64 = (0..n).map(|j| p.objective[j] * x[j]).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        if !next_subset(&mut choose, planes.len()) {
            break;
        }
    }
    best
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// The small mixed-integer toy: `min v1 + 2 v2 + w1 + 3 w2` with
/// `v1 + v2 + w1 + w2 >= 4`, `3 v1 + v2 <= 3`, `2 w1 + w2 <= 3`, all in `[0, 2]`.
pub fn toy_lp() -> LpProblem {
    let mut p = LpProblem::default();
    for c in [1.0, 2.0, 1.0, 3.0] {
        p.add_var(c, 0.0, 2.0);
    }
    p.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)], Relation::Ge, 4.0);
    p.add_row(vec![(0, 3.0), (1, 1.0)], Relation::Le, 3.0);
    p.add_row(vec![(2, 2.0), (3, 1.0)], Relation::Le, 3.0);
    p
}

/// Integer optimum of [`toy_lp`] over `{0,1,2}^4` and its minimizer.
pub fn toy_integer_enumeration() -> (f64, [i32; 4]) {
    let mut best = (f64::INFINITY, [0; 4]);
    for code in 0..81 {
        let v = [code % 3, code / 3 % 3, code / 9 % 3, code / 27];
        let [v1, v2, w1, w2] = v;
        if v1 + v2 + w1 + w2 >= 4 && 3 * v1 + v2 <= 3 && 2 * w1 + w2 <= 3 {
            let c = (v1 + 2 * v2 + w1 + 3 * w2) as f64;
            if c < best.0 {
                best = (c, v);
            }
        }
    }
    best
}
