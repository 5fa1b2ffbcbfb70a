//! Compact formulation over all machines, solved directly by the MINLP kernel.

use crate::lp::Relation;
use crate::machine::{add_machine_block, clean_machine, MachineVars};
use crate::minlp::{solve_minlp, ConvexMinlp, MinlpLimits, MinlpStatus};
use crate::model::{Instance, MachineSchedule, Schedule};
use crate::report::{Method, SolveError, SolveLimits, SolveOutcome, SolveReport, SolveStatus};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct CompactModel {
    pub minlp: ConvexMinlp,
    pub machines: Vec<MachineVars>,
    /// Group of each machine.
    pub machine_group: Vec<usize>,
    pub demand_rows: Vec<usize>,
}

/// Model dimensions: variables, constraints (linear plus nonlinear) and
/// finite variable bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSize {
    pub variables: usize,
    pub constraints: f64,
    pub bounds: f64,
}

pub fn build_compact(instance: &Instance) -> CompactModel {
    let mut minlp = ConvexMinlp::default();
    let machine_group = instance.machine_groups();
    let machines: Vec<MachineVars> = machine_group
        .iter()
        .map(|&g| add_machine_block(&mut minlp, &instance.groups[g], instance.periods, None))
        .collect();
    let demand_rows = (0..instance.periods)
        .map(|t| {
            let coeffs = machines.iter().map(|m| (m.y[t], 1.0)).collect();
            minlp.lp.add_row(coeffs, Relation::Ge, instance.demand[t])
        })
        .collect();
    CompactModel {
        minlp,
        machines,
        machine_group,
        demand_rows,
    }
}

impl CompactModel {
    pub fn size(&self) -> ModelSize {
        let lp = &self.minlp.lp;
        let bounds = lp
            .lower
            .iter()
            .chain(&lp.upper)
            .filter(|b| b.is_finite())
            .count();
        ModelSize {
            variables: lp.num_vars(),
            constraints: (lp.rows.len() + self.minlp.nonlinear.len()) as f64,
            bounds: bounds as f64,
        }
    }

    /// Converts a solution vector to a feasible schedule.
    pub fn schedule(&self, instance: &Instance, sol: &[f64]) -> Schedule {
        let machines = self
            .machines
            .iter()
            .zip(&self.machine_group)
            .map(|(v, &g)| {
                let (x, y, _) = v.extract(sol);
                let (y, r) = clean_machine(&instance.groups[g], &x, &y, None);
                MachineSchedule { group: g, x, y, r }
            })
            .collect();
        Schedule::new(machines)
    }

    /// Plain-text row/column listing.
    pub fn listing(&self) -> String {
        let mut s = self.minlp.lp.dump();
        let _ = writeln!(s, "binaries {}", self.minlp.binaries.len());
        for (i, row) in self.minlp.nonlinear.iter().enumerate() {
            let _ = write!(s, "nl{i}: v{} <= {:?}(", row.target, row.func.kind);
            for a in &row.args {
                let _ = match a {
                    crate::minlp::Arg::Var(j) => write!(s, " v{j}"),
                    crate::minlp::Arg::Const(c) => write!(s, " {c}"),
                };
            }
            let _ = write!(s, " )");
            if let Some((x, m)) = row.relax {
                let _ = write!(s, " + {m} v{x}");
            }
            s.push('\n');
        }
        s
    }
}

/// Size predicted by the closed-form table for the compact model.
pub fn table_size(instance: &Instance) -> ModelSize {
    let t = instance.periods as f64;
    let mut vars = 0usize;
    let mut cons = 0.0;
    let mut bounds = 0.0;
    for &g in &instance.machine_groups() {
        let grp = &instance.groups[g];
        let k = grp.num_components() as f64;
        vars += instance.periods * (1 + 2 * grp.num_components());
        let inv_d: f64 = grp.components.iter().map(|c| 1.0 / c.duration as f64).sum();
        cons += t * (3.0 * k + 1.0 + inv_d + grp.implications.len() as f64);
        bounds += 6.0 * t * (1.0 + k);
    }
    ModelSize {
        variables: vars,
        constraints: cons,
        bounds,
    }
}

pub fn solve_compact(instance: &Instance, limits: &SolveLimits) -> Result<SolveOutcome, SolveError> {
    instance.validate()?;
    let start = Instant::now();
    let model = build_compact(instance);
    let res = solve_minlp(
        &model.minlp,
        &MinlpLimits {
            gap: limits.gap_tol,
            nodes: limits.node_limit.unwrap_or(usize::MAX),
            time: limits.time_limit,
            ..Default::default()
        },
        None,
    )?;
    let mut report = SolveReport::new(Method::Compact);
    report.nodes = res.nodes;
    let schedule = res.incumbent.as_ref().map(|x| model.schedule(instance, x));
    report.status = match res.status {
        MinlpStatus::Optimal => SolveStatus::Optimal,
        MinlpStatus::Infeasible => SolveStatus::Infeasible,
        MinlpStatus::Limit => SolveStatus::Limit,
    };
    if let Some(s) = &schedule {
        let cost = s.cost(instance);
        report.primal_bound = Some(cost);
        report.dual_bound = Some(res.dual_bound.min(cost));
    } else if res.status == MinlpStatus::Limit && res.dual_bound.is_finite() {
        report.dual_bound = Some(res.dual_bound);
    }
    report.set_gap();
    report.wall_time = start.elapsed().as_secs_f64();
    report.breakdown.other = report.wall_time;
    Ok(SolveOutcome { report, schedule })
}
