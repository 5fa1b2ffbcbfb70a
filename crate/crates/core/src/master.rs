//! Restricted master problem: column pool, demand/convexity/branching rows,
//! dual extraction, Farkas mode and the integer-RMP heuristic.

use crate::lp::{LpError, LpProblem, LpStatus, Relation, Simplex};
use crate::minlp::{solve_minlp, ConvexMinlp, MinlpLimits};
use crate::model::{
    validate_schedule, Instance, MachineGroupSpec, MachineSchedule, Schedule, FEAS_TOL,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Duration;

const LP_ITER_LIMIT: usize = 500_000;
pub const DEDUP_TOL: f64 = 1e-9;

/// Relative optimality gap `(primal - dual) / max(1, primal)`.
pub fn rmp_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual) / primal.max(1.0)
}

/// One single-machine schedule of a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub id: usize,
    pub group: usize,
    pub x: Vec<Vec<u8>>,
    pub y: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub cost: f64,
}

impl Column {
    pub fn new(group_id: usize, group: &MachineGroupSpec, x: Vec<Vec<u8>>, y: Vec<f64>, r: Vec<Vec<f64>>) -> Self {
        let cost = group
            .components
            .iter()
            .zip(&x)
            .map(|(c, row)| c.cost * row.iter().filter(|&&v| v != 0).count() as f64)
            .sum();
        Column {
            id: usize::MAX,
            group: group_id,
            x,
            y,
            r,
            cost,
        }
    }

    /// No maintenance, no production.
    pub fn idle(instance: &Instance, group: usize) -> Self {
        let g = &instance.groups[group];
        let s = MachineSchedule::idle(g, group, instance.periods);
        Column::new(group, g, s.x, s.y, s.r)
    }

    pub fn as_machine(&self) -> MachineSchedule {
        MachineSchedule {
            group: self.group,
            x: self.x.clone(),
            y: self.y.clone(),
            r: self.r.clone(),
        }
    }

    /// Single-machine feasibility, the production cap `y <= E` and cost
    /// consistency.
    pub fn check(&self, instance: &Instance) -> Result<(), String> {
        let g = instance
            .groups
            .get(self.group)
            .ok_or_else(|| format!("unknown group {}", self.group))?;
        let single = Instance {
            format_version: instance.format_version,
            periods: instance.periods,
            demand: vec![0.0; instance.periods],
            groups: vec![MachineGroupSpec {
                multiplicity: 1,
                ..g.clone()
            }],
        };
        let mut m = self.as_machine();
        m.group = 0;
        let v = validate_schedule(&single, &Schedule::new(vec![m])).map_err(|e| e.to_string())?;
        if let Some(first) = v.first() {
            return Err(format!("column infeasible: {first}"));
        }
        for (t, (&y, &e)) in self.y.iter().zip(&instance.demand).enumerate() {
            if y > e + FEAS_TOL {
                return Err(format!("production {y} above demand {e} at period {}", t + 1));
            }
        }
        let expect = Column::new(self.group, g, self.x.clone(), vec![], vec![]).cost;
        if (expect - self.cost).abs() > 1e-9 * expect.max(1.0) {
            return Err(format!("cost {} inconsistent with maintenance ({expect})", self.cost));
        }
        Ok(())
    }
}

/// A single maintenance threshold: `x[component][period] >= 1` when
/// `at_least` is set, `<= 0` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Threshold {
    pub component: usize,
    pub period: usize,
    pub at_least: bool,
}

impl Threshold {
    pub fn holds(&self, x: &[Vec<u8>]) -> bool {
        (x[self.component][self.period] != 0) == self.at_least
    }
}

pub fn satisfies(x: &[Vec<u8>], beta: &[Threshold]) -> bool {
    beta.iter().all(|p| p.holds(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Down,
    Up,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingDecision {
    pub group: usize,
    pub beta: Vec<Threshold>,
    pub side: Side,
    /// Fractional value of the membership sum when the branch was created.
    pub value: f64,
}

impl BranchingDecision {
    /// `floor(value)` on the down side, `ceil(value)` on the up side.
    pub fn rhs(&self) -> f64 {
        match self.side {
            Side::Down => self.value.floor(),
            Side::Up => self.value.ceil(),
        }
    }

    pub fn relation(&self) -> Relation {
        match self.side {
            Side::Down => Relation::Le,
            Side::Up => Relation::Ge,
        }
    }

    pub fn applies(&self, col: &Column) -> bool {
        col.group == self.group && satisfies(&col.x, &self.beta)
    }
}

/// Duals sent to pricing.
#[derive(Clone, Debug, PartialEq)]
pub struct DualBundle {
    /// Demand rows, `>= 0`.
    pub pi: Vec<f64>,
    /// Convexity rows (equalities, free sign).
    pub theta: Vec<f64>,
    /// Branching rows by row id; 0 for inactive rows.
    pub gamma: Vec<f64>,
}

impl DualBundle {
    pub fn zero(periods: usize, groups: usize, branch_rows: usize) -> Self {
        DualBundle {
            pi: vec![0.0; periods],
            theta: vec![0.0; groups],
            gamma: vec![0.0; branch_rows],
        }
    }
}

#[derive(Clone, Debug)]
pub struct RmpSolution {
    pub objective: f64,
    /// One value per pool column.
    pub lambda: Vec<f64>,
    pub duals: DualBundle,
}

#[derive(Clone, Debug)]
pub enum RmpOutcome {
    Optimal(RmpSolution),
    /// Farkas multipliers, same layout and sign convention as the duals.
    Infeasible(DualBundle),
}

#[derive(Clone, Debug)]
struct BranchRow {
    decision: BranchingDecision,
    members: Vec<usize>,
    active: bool,
}

#[derive(Clone, Debug)]
pub struct MasterState {
    pub instance: Instance,
    columns: Vec<Column>,
    by_group: Vec<Vec<usize>>,
    index: HashMap<(usize, Vec<Vec<u8>>), Vec<usize>>,
    rows: Vec<BranchRow>,
    lp: Simplex,
}

impl MasterState {
    pub fn new(instance: &Instance) -> Self {
        let mut p = LpProblem::default();
        for &e in &instance.demand {
            p.add_row(vec![], Relation::Ge, e);
        }
        for g in &instance.groups {
            p.add_row(vec![], Relation::Eq, g.multiplicity as f64);
        }
        let lp = Simplex::new(&p).expect("empty master is well formed");
        MasterState {
            instance: instance.clone(),
            columns: Vec::new(),
            by_group: vec![Vec::new(); instance.groups.len()],
            index: HashMap::new(),
            rows: Vec::new(),
            lp,
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn group_columns(&self, group: usize) -> &[usize] {
        &self.by_group[group]
    }

    pub fn num_branch_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn decision(&self, row: usize) -> &BranchingDecision {
        &self.rows[row].decision
    }

    pub fn members(&self, row: usize) -> &[usize] {
        &self.rows[row].members
    }

    pub fn active_rows(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].active).collect()
    }

    /// Active decisions of one group as `(row id, decision)`.
    pub fn active_decisions(&self, group: usize) -> Vec<(usize, &BranchingDecision)> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.active && r.decision.group == group)
            .map(|(i, r)| (i, &r.decision))
            .collect()
    }

    fn demand_row(&self, t: usize) -> usize {
        t
    }

    fn convexity_row(&self, group: usize) -> usize {
        self.instance.periods + group
    }

    fn branch_lp_row(&self, row: usize) -> usize {
        self.instance.periods + self.instance.groups.len() + row
    }

    fn find(&self, col: &Column) -> Option<usize> {
        self.index.get(&(col.group, col.x.clone())).and_then(|ids| {
            ids.iter().copied().find(|&i| {
                self.columns[i]
                    .y
                    .iter()
                    .zip(&col.y)
                    .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
            })
        })
    }

    pub fn contains(&self, col: &Column) -> bool {
        self.find(col).is_some()
    }

    /// Adds a column (or returns the id of an identical one) and extends the
    /// membership of every branching row it satisfies.
    pub fn add_column(&mut self, col: Column) -> Result<usize, String> {
        col.check(&self.instance)?;
        Ok(self.add_column_unchecked(col))
    }

    /// Adds a column without the feasibility and production-cap checks.
    /// Meant for hand-built fixtures; solver code goes through `add_column`.
    pub fn add_column_unchecked(&mut self, mut col: Column) -> usize {
        if let Some(id) = self.find(&col) {
            return id;
        }
        let id = self.columns.len();
        col.id = id;
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (t, &y) in col.y.iter().enumerate() {
            if y != 0.0 {
                coeffs.push((self.demand_row(t), y));
            }
        }
        coeffs.push((self.convexity_row(col.group), 1.0));
        for r in 0..self.rows.len() {
            if self.rows[r].decision.applies(&col) {
                self.rows[r].members.push(id);
                coeffs.push((self.branch_lp_row(r), 1.0));
            }
        }
        let j = self.lp.add_column(col.cost, 0.0, f64::INFINITY, &coeffs);
        debug_assert_eq!(j, id);
        self.by_group[col.group].push(id);
        self.index.entry((col.group, col.x.clone())).or_default().push(id);
        self.columns.push(col);
        id
    }

    /// Adds a branching row over all current pool columns satisfying the
    /// decision; the row starts active.
    pub fn add_branch_row(&mut self, decision: BranchingDecision) -> usize {
        let members: Vec<usize> = self
            .columns
            .iter()
            .filter(|c| decision.applies(c))
            .map(|c| c.id)
            .collect();
        let coeffs: Vec<(usize, f64)> = members.iter().map(|&i| (i, 1.0)).collect();
        self.lp.add_row(&coeffs, decision.relation(), decision.rhs());
        self.rows.push(BranchRow {
            decision,
            members,
            active: true,
        });
        self.rows.len() - 1
    }

    /// Activates exactly the given branching rows.
    pub fn set_active(&mut self, active: &[usize]) {
        let mut on = vec![false; self.rows.len()];
        for &r in active {
            on[r] = true;
        }
        for (r, &a) in on.iter().enumerate() {
            self.rows[r].active = a;
            let lr = self.branch_lp_row(r);
            if a {
                let d = &self.rows[r].decision;
                self.lp.set_row(lr, d.relation(), d.rhs());
            } else {
                self.lp.set_row_bounds(lr, f64::NEG_INFINITY, f64::INFINITY);
            }
        }
    }

    fn split_duals(&self, y: &[f64]) -> DualBundle {
        let t = self.instance.periods;
        let g = self.instance.groups.len();
        DualBundle {
            pi: y[..t].to_vec(),
            theta: y[t..t + g].to_vec(),
            gamma: (0..self.rows.len())
                .map(|r| if self.rows[r].active { y[t + g + r] } else { 0.0 })
                .collect(),
        }
    }

    pub fn solve_rmp(&mut self) -> Result<RmpOutcome, LpError> {
        let sol = self.lp.solve(LP_ITER_LIMIT)?;
        match sol.status {
            LpStatus::Optimal => Ok(RmpOutcome::Optimal(RmpSolution {
                objective: sol.objective,
                lambda: sol.primal,
                duals: self.split_duals(&sol.duals),
            })),
            LpStatus::Infeasible => {
                let ray = sol.farkas_ray.expect("infeasible LP carries a ray");
                Ok(RmpOutcome::Infeasible(self.split_duals(&ray)))
            }
            LpStatus::Unbounded => Err(LpError::Malformed("unbounded master".into())),
            LpStatus::IterationLimit => Err(LpError::Malformed("master iteration limit".into())),
        }
    }

    /// Solves the RMP with integral `lambda` over the current pool. Returns
    /// the first solution strictly below `cutoff`.
    pub fn solve_integer_rmp(&self, limits: &IntegerRmpLimits) -> Result<Option<(Vec<f64>, f64)>, LpError> {
        if self.columns.is_empty() {
            return Ok(None);
        }
        let mut m = ConvexMinlp::default();
        for c in &self.columns {
            let z = self.instance.groups[c.group].multiplicity as f64;
            let j = m.lp.add_var(c.cost, 0.0, z);
            m.integers.push(j);
        }
        for t in 0..self.instance.periods {
            let coeffs = self
                .columns
                .iter()
                .filter(|c| c.y[t] != 0.0)
                .map(|c| (c.id, c.y[t]))
                .collect();
            m.lp.add_row(coeffs, Relation::Ge, self.instance.demand[t]);
        }
        for (g, grp) in self.instance.groups.iter().enumerate() {
            let coeffs = self.by_group[g].iter().map(|&i| (i, 1.0)).collect();
            m.lp.add_row(coeffs, Relation::Eq, grp.multiplicity as f64);
        }
        for r in self.rows.iter().filter(|r| r.active) {
            let coeffs = r.members.iter().map(|&i| (i, 1.0)).collect();
            m.lp.add_row(coeffs, r.decision.relation(), r.decision.rhs());
        }
        let res = solve_minlp(
            &m,
            &MinlpLimits {
                gap: 1e-9,
                solutions: limits.solutions,
                nodes: limits.nodes,
                time: limits.time,
                ..Default::default()
            },
            limits.cutoff.map(|c| c - 1e-6),
        )?;
        Ok(res.incumbent.map(|x| {
            let lambda: Vec<f64> = x.iter().map(|v| v.round()).collect();
            let obj = self
                .columns
                .iter()
                .map(|c| c.cost * lambda[c.id])
                .sum::<f64>();
            (lambda, obj)
        }))
    }

    /// Expands integral group-level multiplicities into a per-machine
    /// schedule, filling unused machines with idle schedules.
    pub fn expand(&self, lambda: &[f64]) -> Schedule {
        expand_columns(
            &self.instance,
            self.columns.iter().map(|c| (c, lambda[c.id].round() as usize)),
        )
    }

    /// Pool as JSON for post-mortem inspection.
    pub fn dump_pool(&self) -> String {
        serde_json::to_string_pretty(&self.columns).expect("pool serialization")
    }

    /// Recomputes every branching row's membership from its thresholds.
    pub fn recompute_memberships(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .filter(|c| r.decision.applies(c))
                    .map(|c| c.id)
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct IntegerRmpLimits {
    pub time: Option<Duration>,
    pub solutions: usize,
    pub nodes: usize,
    pub cutoff: Option<f64>,
}

/// Per-machine schedule from `(column, copies)` pairs; machines of each
/// group are filled in order and the rest stay idle.
pub fn expand_columns<'a>(
    instance: &Instance,
    used: impl Iterator<Item = (&'a Column, usize)>,
) -> Schedule {
    let mut per_group: Vec<Vec<MachineSchedule>> = vec![Vec::new(); instance.groups.len()];
    for (c, n) in used {
        for _ in 0..n {
            per_group[c.group].push(c.as_machine());
        }
    }
    let mut machines = Vec::new();
    for (g, grp) in instance.groups.iter().enumerate() {
        let mut ms = std::mem::take(&mut per_group[g]);
        assert!(ms.len() <= grp.multiplicity, "group {g} uses more machines than it has");
        while ms.len() < grp.multiplicity {
            ms.push(MachineSchedule::idle(grp, g, instance.periods));
        }
        machines.extend(ms);
    }
    Schedule::new(machines)
}
