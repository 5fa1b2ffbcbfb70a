//! Per-group pricing problems, reduced costs and master bounds.

use crate::lp::{LpError, Relation};
use crate::machine::{add_machine_block, clean_machine, MachineVars};
use crate::master::{satisfies, BranchingDecision, Column, DualBundle};
use crate::minlp::{solve_minlp, ConvexMinlp, MinlpLimits, MinlpStatus};
use crate::model::Instance;
use std::time::Duration;
use thiserror::Error;

/// Columns must price below this to be added.
pub const RC_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum PricingError {
    #[error("decision on group {decision} used for group {group}")]
    WrongGroup { group: usize, decision: usize },
    #[error("threshold on x[{component}][{period}] outside the group's variables")]
    OutOfRange { component: usize, period: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Clone, Debug)]
pub struct PricingProblem {
    pub group: usize,
    pub minlp: ConvexMinlp,
    pub vars: MachineVars,
    /// `(branching row id, indicator variable)`.
    pub indicators: Vec<(usize, usize)>,
    /// Convexity dual; the reduced cost is the MINLP objective minus this.
    pub theta: f64,
    /// Right-hand side of the early-stop cut, if added.
    pub stop_rhs: Option<f64>,
    /// Zero maintenance costs (Farkas multipliers as prices).
    pub farkas: bool,
    periods: usize,
}

/// Builds the pricing problem of group `z`: maintenance cost (zero in Farkas
/// mode) minus the demand prices of production minus the branching duals of
/// the indicator variables.
pub fn build_pricing(
    instance: &Instance,
    z: usize,
    duals: &DualBundle,
    decisions: &[(usize, &BranchingDecision)],
    farkas: bool,
) -> Result<PricingProblem, PricingError> {
    let group = &instance.groups[z];
    let periods = instance.periods;
    for (_, d) in decisions {
        if d.group != z {
            return Err(PricingError::WrongGroup {
                group: z,
                decision: d.group,
            });
        }
        for p in &d.beta {
            if p.component >= group.num_components() || p.period >= periods {
                return Err(PricingError::OutOfRange {
                    component: p.component,
                    period: p.period,
                });
            }
        }
    }
    let mut m = ConvexMinlp::default();
    let vars = add_machine_block(&mut m, group, periods, None);
    if farkas {
        for row in &vars.x {
            for &j in row {
                m.lp.objective[j] = 0.0;
            }
        }
    }
    for t in 0..periods {
        m.lp.objective[vars.y[t]] = -duals.pi[t];
        m.lp
            .add_row(vec![(vars.y[t], 1.0)], Relation::Le, instance.demand[t]);
    }
    let mut indicators = Vec::new();
    for &(row, d) in decisions {
        let gamma = duals.gamma.get(row).copied().unwrap_or(0.0);
        let ub = if gamma == 0.0 { 0.0 } else { 1.0 };
        let delta = m.lp.add_var(-gamma, 0.0, ub);
        m.binaries.push(delta);
        indicators.push((row, delta));
        let x = |p: &crate::master::Threshold| vars.x[p.component][p.period];
        if gamma > 0.0 {
            for p in &d.beta {
                if p.at_least {
                    m.lp
                        .add_row(vec![(delta, 1.0), (x(p), -1.0)], Relation::Le, 0.0);
                } else {
                    m.lp
                        .add_row(vec![(delta, 1.0), (x(p), 1.0)], Relation::Le, 1.0);
                }
            }
        } else if gamma < 0.0 {
            let mut coeffs = vec![(delta, 1.0)];
            let mut n_ge = 0.0;
            for p in &d.beta {
                if p.at_least {
                    coeffs.push((x(p), -1.0));
                    n_ge += 1.0;
                } else {
                    coeffs.push((x(p), 1.0));
                }
            }
            m.lp.add_row(coeffs, Relation::Ge, 1.0 - n_ge);
        }
    }
    Ok(PricingProblem {
        group: z,
        minlp: m,
        vars,
        indicators,
        theta: duals.theta[z],
        stop_rhs: None,
        farkas,
        periods,
    })
}

impl PricingProblem {
    /// Objective value of the pricing model at a column (with indicators set
    /// from the thresholds), including the convexity dual.
    pub fn objective_at(&self, col: &Column, decisions: &[(usize, &BranchingDecision)]) -> f64 {
        let mut point = vec![0.0; self.minlp.lp.num_vars()];
        for (k, row) in self.vars.x.iter().enumerate() {
            for (t, &j) in row.iter().enumerate() {
                point[j] = f64::from(col.x[k][t]);
            }
        }
        for t in 0..self.periods {
            point[self.vars.y[t]] = col.y[t];
        }
        for (&(row, delta), (drow, d)) in self.indicators.iter().zip(decisions) {
            debug_assert_eq!(row, *drow);
            if self.minlp.lp.upper[delta] > 0.0 && satisfies(&col.x, &d.beta) {
                point[delta] = 1.0;
            }
        }
        self.minlp
            .lp
            .objective
            .iter()
            .zip(&point)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            - self.theta
    }

    /// Adds `reduced cost <= rhs`.
    pub fn add_objective_cut(&mut self, rhs: f64) {
        let coeffs = self
            .minlp
            .lp
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        self.minlp
            .lp
            .add_row(coeffs, Relation::Le, rhs + self.theta);
        self.stop_rhs = Some(rhs);
    }
}

#[derive(Clone, Debug)]
pub struct PricedColumn {
    pub column: Column,
    pub reduced_cost: f64,
    /// Lower bound on the group's minimum reduced cost.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct PricingResult {
    pub column: Option<PricedColumn>,
    /// Valid lower bound on the minimum reduced cost (w_z).
    pub bound: f64,
    pub nodes: usize,
    /// The bound is the exact optimum (within tolerance).
    pub proven: bool,
}

#[derive(Clone, Debug)]
pub struct PricingLimits {
    pub gap: f64,
    pub solutions: usize,
    pub nodes: usize,
    pub time: Option<Duration>,
}

impl PricingLimits {
    pub fn limited(time: Option<Duration>) -> Self {
        PricingLimits {
            gap: 0.2,
            solutions: 3,
            nodes: 500,
            time,
        }
    }

    pub fn exact(time: Option<Duration>) -> Self {
        PricingLimits {
            gap: 1e-6,
            solutions: usize::MAX,
            nodes: usize::MAX,
            time,
        }
    }
}

/// Solves a pricing problem. Returns the best column if its reduced cost is
/// below `-RC_TOL`, always with a valid lower bound.
pub fn solve_pricing(
    instance: &Instance,
    p: &PricingProblem,
    duals: &DualBundle,
    decisions: &[(usize, &BranchingDecision)],
    limits: &PricingLimits,
) -> Result<PricingResult, PricingError> {
    let cutoff = p.theta - RC_TOL;
    let res = solve_minlp(
        &p.minlp,
        &MinlpLimits {
            gap: limits.gap,
            solutions: limits.solutions,
            nodes: limits.nodes,
            time: limits.time,
            ..Default::default()
        },
        Some(cutoff),
    )?;
    let mut bound = res.dual_bound - p.theta;
    if res.status == MinlpStatus::Infeasible {
        bound = f64::INFINITY;
    }
    if let Some(rhs) = p.stop_rhs {
        bound = bound.min(rhs);
    }
    // A tree closed by the cutoff proves no improving column exists.
    let proven = res.status != MinlpStatus::Limit || res.gap() <= 1e-6 || res.dual_bound >= cutoff - 1e-9;
    let column = res.incumbent.as_ref().and_then(|sol| {
        let group = &instance.groups[p.group];
        let (x, y, _) = p.vars.extract(sol);
        let (y, r) = clean_machine(group, &x, &y, Some(&instance.demand));
        let col = Column::new(p.group, group, x, y, r);
        let rc = if p.farkas {
            reduced_cost_with(&col, 0.0, duals, decisions)
        } else {
            reduced_cost(&col, duals, decisions)
        };
        (rc < -RC_TOL).then(|| PricedColumn {
            column: col,
            reduced_cost: rc,
            bound: bound.min(rc),
        })
    });
    if let Some(c) = &column {
        bound = bound.min(c.reduced_cost);
    }
    Ok(PricingResult {
        column,
        bound,
        nodes: res.nodes,
        proven,
    })
}

fn reduced_cost_with(col: &Column, cost: f64, duals: &DualBundle, decisions: &[(usize, &BranchingDecision)]) -> f64 {
    let py: f64 = duals.pi.iter().zip(&col.y).map(|(p, y)| p * y).sum();
    let gd: f64 = decisions
        .iter()
        .filter(|(_, d)| d.applies(col))
        .map(|&(row, _)| duals.gamma.get(row).copied().unwrap_or(0.0))
        .sum();
    cost - py - duals.theta[col.group] - gd
}

/// `cost - pi.y - theta_z - sum of gamma_b over decisions the column satisfies`.
pub fn reduced_cost(col: &Column, duals: &DualBundle, decisions: &[(usize, &BranchingDecision)]) -> f64 {
    reduced_cost_with(col, col.cost, duals, decisions)
}

/// `c_rmp + sum_z Z_z * min(0, w_z)`.
pub fn lagrangian_bound(c_rmp: f64, w: &[f64], multiplicities: &[usize]) -> f64 {
    c_rmp
        + w.iter()
            .zip(multiplicities)
            .map(|(&wz, &z)| z as f64 * wz.min(0.0))
            .sum::<f64>()
}

/// Smallest cost per unit of priced production over the candidates, times
/// the priced demand. `None` when no candidate has positive priced production.
pub fn farley_bound(pi: &[f64], candidates: &[Column], demand: &[f64]) -> Option<f64> {
    let l = min_lambda_price(pi, candidates)?;
    let pe: f64 = pi.iter().zip(demand).map(|(p, e)| p * e).sum();
    Some(l * pe)
}

/// `min cost / pi.y` over candidates with `pi.y > 0`.
pub fn min_lambda_price(pi: &[f64], candidates: &[Column]) -> Option<f64> {
    candidates
        .iter()
        .filter_map(|c| {
            let py: f64 = pi.iter().zip(&c.y).map(|(p, y)| p * y).sum();
            (py > 1e-12).then(|| c.cost / py)
        })
        .min_by(f64::total_cmp)
}

/// Reduced-cost ceiling for the early-stop cut, or `None` without an incumbent.
pub fn early_stop_cut(c_imp: f64, c_rmp: f64, multiplicity: usize) -> Option<f64> {
    c_imp
        .is_finite()
        .then(|| (c_imp - c_rmp) / multiplicity as f64)
}

/// Heuristic reduced-cost estimate of a group: greedily produce
/// `min(Q_min, E_t)` in the most valuable periods while the machine survives
/// without maintenance.
pub fn jit_estimate(instance: &Instance, z: usize, duals: &DualBundle) -> f64 {
    let group = &instance.groups[z];
    let periods = instance.periods;
    let mut order: Vec<usize> = (0..periods).collect();
    order.sort_by(|&a, &b| duals.pi[b].total_cmp(&duals.pi[a]).then(a.cmp(&b)));
    let x = vec![vec![0u8; periods]; group.num_components()];
    let mut y = vec![0.0; periods];
    let survives = |y: &[f64]| {
        let r = group.condition_trajectory(&x, y);
        (0..periods).all(|t| {
            (0..group.num_components())
                .all(|k| r[k][t] >= -1e-9 && y[t] <= group.limit(k, r[k][t].max(0.0)) + 1e-9)
        })
    };
    for t in order {
        if duals.pi[t] <= 0.0 {
            break;
        }
        let v = group.q_min().min(instance.demand[t]);
        if v <= 0.0 {
            continue;
        }
        y[t] = v;
        if !survives(&y) {
            y[t] = 0.0;
        }
    }
    -duals.pi.iter().zip(&y).map(|(p, v)| p * v).sum::<f64>() - duals.theta[z]
}

/// Groups ordered by ascending heuristic estimate, ties by id.
pub fn jit_ordering(instance: &Instance, duals: &DualBundle) -> Vec<usize> {
    let est: Vec<f64> = (0..instance.groups.len())
        .map(|z| jit_estimate(instance, z, duals))
        .collect();
    let mut order: Vec<usize> = (0..instance.groups.len()).collect();
    order.sort_by(|&a, &b| est[a].total_cmp(&est[b]).then(a.cmp(&b)));
    order
}
