//! Single-machine constraint block shared by the compact model and the
//! pricing problems, plus the cleanup that turns a relaxation point into an
//! exactly feasible machine schedule.

use crate::lp::Relation;
use crate::minlp::{Arg, ConvexMinlp, NonlinearRow};
use crate::model::MachineGroupSpec;

/// Column indices of one machine's variables.
#[derive(Clone, Debug)]
pub struct MachineVars {
    /// `x[k][t]`
    pub x: Vec<Vec<usize>>,
    pub y: Vec<usize>,
    /// `r[k][t]`
    pub r: Vec<Vec<usize>>,
}

impl MachineVars {
    pub fn extract(&self, sol: &[f64]) -> (Vec<Vec<u8>>, Vec<f64>, Vec<Vec<f64>>) {
        let x = self
            .x
            .iter()
            .map(|row| row.iter().map(|&j| u8::from(sol[j] > 0.5)).collect())
            .collect();
        let y = self.y.iter().map(|&j| sol[j]).collect();
        let r = self
            .r
            .iter()
            .map(|row| row.iter().map(|&j| sol[j]).collect())
            .collect();
        (x, y, r)
    }
}

/// Appends the variables and rows of one machine: downtime, duration,
/// implications, degradation (big-M relaxed), production limits and the
/// late-start valid inequality. Maintenance variables carry their cost in the
/// objective; production and condition variables cost 0. `y_cap` bounds
/// production per period on top of the smallest component capacity.
pub fn add_machine_block(
    m: &mut ConvexMinlp,
    group: &MachineGroupSpec,
    periods: usize,
    y_cap: Option<&[f64]>,
) -> MachineVars {
    let kk = group.num_components();
    let qmin = group.q_min();
    let x: Vec<Vec<usize>> = group
        .components
        .iter()
        .map(|c| (0..periods).map(|_| m.lp.add_var(c.cost, 0.0, 1.0)).collect())
        .collect();
    for row in &x {
        m.binaries.extend(row.iter().copied());
    }
    let y: Vec<usize> = (0..periods)
        .map(|t| {
            let cap = y_cap.map_or(qmin, |c| c[t].min(qmin)).max(0.0);
            m.lp.add_var(0.0, 0.0, cap)
        })
        .collect();
    let r: Vec<Vec<usize>> = group
        .components
        .iter()
        .map(|c| {
            (0..periods)
                .map(|_| m.lp.add_var(0.0, 0.0, c.max_condition))
                .collect()
        })
        .collect();

    for (k, c) in group.components.iter().enumerate() {
        let q = c.max_production;
        let d = c.duration;
        for t in 0..periods {
            // Downtime: y_t + Q x_t <= Q.
            m.lp
                .add_row(vec![(y[t], 1.0), (x[k][t], q)], Relation::Le, q);
            // Duration: a start at t keeps the component down for D more periods.
            for i in t + 1..=(t + d).min(periods - 1) {
                let mut coeffs = vec![(x[k][i], 1.0), (x[k][t], -1.0)];
                if t > 0 {
                    coeffs.push((x[k][t - 1], 1.0));
                }
                m.lp.add_row(coeffs, Relation::Ge, 0.0);
            }
        }
        // Late starts cannot finish inside the horizon.
        if d >= periods {
            for t in 0..periods {
                m.lp.upper[x[k][t]] = 0.0;
            }
        } else {
            let anchor = periods - d - 1;
            for t in anchor + 1..periods {
                m.lp
                    .add_row(vec![(x[k][t], 1.0), (x[k][anchor], -1.0)], Relation::Le, 0.0);
            }
        }
    }
    for &[a, b] in &group.implications {
        for t in 0..periods {
            m.lp
                .add_row(vec![(x[a][t], 1.0), (x[b][t], -1.0)], Relation::Le, 0.0);
        }
    }
    for (k, c) in group.components.iter().enumerate() {
        let upper = group.func_box(k);
        let big_m = group.big_m(k);
        for t in 0..periods {
            let mut args = Vec::with_capacity(2 + kk);
            let prev = |j: usize| {
                if t == 0 {
                    Arg::Const(group.components[j].max_condition)
                } else {
                    Arg::Var(r[j][t - 1])
                }
            };
            args.push(prev(k));
            args.push(Arg::Var(y[t]));
            args.extend((0..kk).map(prev));
            m.nonlinear.push(NonlinearRow {
                target: r[k][t],
                func: c.f.clone(),
                args,
                upper: upper.clone(),
                relax: Some((x[k][t], big_m)),
            });
            m.nonlinear.push(NonlinearRow {
                target: y[t],
                func: c.g.clone(),
                args: vec![Arg::Var(r[k][t]), Arg::Const(0.0)],
                upper: vec![c.max_condition, c.max_production],
                relax: None,
            });
        }
    }
    MachineVars { x, y, r }
}

/// Exactly feasible `(y, r)` for maintenance `x` starting from production
/// `y`: conditions follow the largest trajectory and production is clipped
/// to downtime, capacity, the optional cap and every limit function.
pub fn clean_machine(
    group: &MachineGroupSpec,
    x: &[Vec<u8>],
    y: &[f64],
    cap: Option<&[f64]>,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let periods = y.len();
    let qmin = group.q_min();
    let mut y: Vec<f64> = (0..periods)
        .map(|t| {
            let down = x.iter().any(|row| row[t] != 0);
            if down {
                0.0
            } else {
                let c = cap.map_or(f64::INFINITY, |c| c[t]);
                y[t].min(qmin).min(c).max(0.0)
            }
        })
        .collect();
    // Clipping production only raises conditions, so one forward pass with
    // per-period clipping converges.
    let kk = group.num_components();
    let mut r = vec![vec![0.0; periods]; kk];
    let mut prev: Vec<f64> = group.components.iter().map(|c| c.max_condition).collect();
    for t in 0..periods {
        let mut cur = vec![0.0; kk];
        for k in 0..kk {
            let rk = group.components[k].max_condition;
            cur[k] = if x[k][t] != 0 {
                rk
            } else {
                group.degrade(k, &prev, y[t]).min(rk)
            };
        }
        let lim = (0..kk)
            .map(|k| group.limit(k, cur[k].max(0.0)))
            .fold(f64::INFINITY, f64::min);
        if y[t] > lim {
            y[t] = lim.max(0.0);
            for k in 0..kk {
                if x[k][t] == 0 {
                    let rk = group.components[k].max_condition;
                    cur[k] = group.degrade(k, &prev, y[t]).min(rk);
                }
            }
        }
        for k in 0..kk {
            cur[k] = cur[k].max(0.0);
            r[k][t] = cur[k];
        }
        prev = cur;
    }
    (y, r)
}
