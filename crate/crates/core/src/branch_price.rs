//! Branch-and-price over the pattern master: threshold-set branching, the
//! equivalence-class integrality test, repair of fractional classes, bounds
//! and the search loop.

use crate::machine::clean_machine;
use crate::master::{
    expand_columns, rmp_gap, BranchingDecision, Column, DualBundle, IntegerRmpLimits, MasterState,
    RmpOutcome, Side, Threshold,
};
use crate::model::{Instance, Schedule};
use crate::par;
use crate::pricing::{
    build_pricing, early_stop_cut, farley_bound, jit_ordering, lagrangian_bound,
    min_lambda_price, solve_pricing, PricingError, PricingLimits, PricingResult,
};
use crate::report::{
    BoundKind, BoundRecord, Method, NodeRecord, NodeStatus, SolveError, SolveLimits, SolveOutcome,
    SolveReport, SolveStatus,
};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

pub const FRAC_TOL: f64 = 1e-6;
const SUPPORT_TOL: f64 = 1e-9;
/// Pricing rounds a node must see before early branching may trigger.
pub const EARLY_BRANCH_MIN_ROUNDS: usize = 5;
/// New columns needed before the integer-RMP heuristic reruns.
pub const RMP_HEURISTIC_COLUMNS: usize = 25;

fn frac(v: f64) -> f64 {
    (v - v.round()).abs()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Integrality {
    Satisfied,
    Violated { group: usize },
}

/// Support columns of each group partitioned by maintenance pattern, with
/// the class sums; classes are ordered by first member id.
pub fn pattern_classes(state: &MasterState, lambda: &[f64], group: usize) -> Vec<(Vec<usize>, f64)> {
    let mut classes: BTreeMap<usize, (Vec<usize>, f64)> = BTreeMap::new();
    let mut head: Vec<(usize, &Vec<Vec<u8>>)> = Vec::new();
    for &i in state.group_columns(group) {
        let l = lambda.get(i).copied().unwrap_or(0.0);
        if l <= SUPPORT_TOL {
            continue;
        }
        let x = &state.columns()[i].x;
        let key = match head.iter().find(|(_, hx)| *hx == x) {
            Some(&(k, _)) => k,
            None => {
                head.push((i, x));
                i
            }
        };
        let e = classes.entry(key).or_insert((Vec::new(), 0.0));
        e.0.push(i);
        e.1 += l;
    }
    classes.into_values().collect()
}

/// Every class of identical maintenance patterns must carry an integral sum.
pub fn check_integrality(state: &MasterState, lambda: &[f64]) -> Integrality {
    for z in 0..state.instance.groups.len() {
        if pattern_classes(state, lambda, z)
            .iter()
            .any(|(_, s)| frac(*s) > FRAC_TOL)
        {
            return Integrality::Violated { group: z };
        }
    }
    Integrality::Satisfied
}

/// `true` for the `>= 1` side. Larger side first, then larger sum of
/// squared values, then `<= 0`.
pub fn choose_threshold_direction(le_side: &[f64], ge_side: &[f64]) -> bool {
    match ge_side.len().cmp(&le_side.len()) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            let sq = |v: &[f64]| v.iter().map(|l| l * l).sum::<f64>();
            sq(ge_side) > sq(le_side) + 1e-12
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchCandidate {
    pub group: usize,
    pub beta: Vec<Threshold>,
    /// Fractional support columns satisfying `beta`.
    pub support: Vec<usize>,
    /// Sum of `lambda` over `support`.
    pub support_sum: f64,
    /// Sum of `lambda` over every pool column satisfying `beta`.
    pub value: f64,
    /// Support sums of the threshold sets examined, in order.
    pub trace: Vec<f64>,
}

/// Searches threshold sets over group `z`'s maintenance variables until the
/// fractional support satisfying them has a fractional sum.
pub fn find_branching(state: &MasterState, lambda: &[f64], z: usize) -> Option<BranchCandidate> {
    let group = &state.instance.groups[z];
    let periods = state.instance.periods;
    let cols = state.columns();
    let support: Vec<usize> = state
        .group_columns(z)
        .iter()
        .copied()
        .filter(|&i| frac(lambda[i]) > FRAC_TOL)
        .collect();
    if support.is_empty() {
        return None;
    }
    let dominant = *support
        .iter()
        .max_by(|&&a, &&b| lambda[a].total_cmp(&lambda[b]).then(b.cmp(&a)))
        .expect("nonempty");
    let mut vars: Vec<(usize, usize, usize)> = Vec::new();
    for t in 0..periods {
        for k in 0..group.num_components() {
            let d = support
                .iter()
                .filter(|&&i| cols[i].x[k][t] != cols[dominant].x[k][t])
                .count();
            if d > 0 {
                vars.push((d, t, k));
            }
        }
    }
    vars.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let sum = |set: &[usize]| set.iter().map(|&i| lambda[i]).sum::<f64>();
    let mut trace = Vec::new();
    let mut stack: Vec<(Vec<Threshold>, Vec<usize>)> = vec![(Vec::new(), support.clone())];
    while let Some((beta, members)) = stack.pop() {
        let s = sum(&members);
        trace.push(s);
        if frac(s) > FRAC_TOL {
            let value: f64 = state
                .group_columns(z)
                .iter()
                .filter(|&&i| crate::master::satisfies(&cols[i].x, &beta))
                .map(|&i| lambda[i])
                .sum();
            return Some(BranchCandidate {
                group: z,
                beta,
                support: members,
                support_sum: s,
                value,
                trace,
            });
        }
        let split = vars.iter().find(|&&(_, t, k)| {
            !beta.iter().any(|p| p.component == k && p.period == t)
                && members.iter().any(|&i| cols[i].x[k][t] != 0)
                && members.iter().any(|&i| cols[i].x[k][t] == 0)
        });
        let Some(&(_, t, k)) = split else { continue };
        let (ge, le): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| cols[i].x[k][t] != 0);
        let lv = |v: &[usize]| v.iter().map(|&i| lambda[i]).collect::<Vec<_>>();
        let prefer_ge = choose_threshold_direction(&lv(&le), &lv(&ge));
        let child = |at_least: bool, set: Vec<usize>| {
            let mut b = beta.clone();
            b.push(Threshold {
                component: k,
                period: t,
                at_least,
            });
            (b, set)
        };
        let (first, second) = if prefer_ge {
            (child(true, ge), child(false, le))
        } else {
            (child(false, le), child(true, ge))
        };
        stack.push(second);
        stack.push(first);
    }
    None
}

/// Creates the down and up decisions for a candidate and registers both
/// rows with the master. Returns `(down row, up row)`.
pub fn apply_branching(state: &mut MasterState, candidate: &BranchCandidate) -> (usize, usize) {
    let mk = |side| BranchingDecision {
        group: candidate.group,
        beta: candidate.beta.clone(),
        side,
        value: candidate.value,
    };
    let down = state.add_branch_row(mk(Side::Down));
    let up = state.add_branch_row(mk(Side::Up));
    (down, up)
}

/// Turns a class-integral master solution into one schedule per machine by
/// merging each class into its weighted average column.
pub fn repair_step(state: &MasterState, lambda: &[f64]) -> Schedule {
    let inst = &state.instance;
    let mut used: Vec<(Column, usize)> = Vec::new();
    for z in 0..inst.groups.len() {
        for (members, s) in pattern_classes(state, lambda, z) {
            let copies = s.round();
            assert!(frac(s) <= FRAC_TOL, "class sum {s} is not integral");
            if copies < 0.5 {
                continue;
            }
            let cols = state.columns();
            let merged = if members.len() == 1 {
                cols[members[0]].clone()
            } else {
                let x = cols[members[0]].x.clone();
                let mut y = vec![0.0; inst.periods];
                for &i in &members {
                    for (t, v) in y.iter_mut().enumerate() {
                        *v += lambda[i] * cols[i].y[t];
                    }
                }
                for v in y.iter_mut() {
                    *v /= s;
                }
                let (y, r) = clean_machine(&inst.groups[z], &x, &y, Some(&inst.demand));
                Column::new(z, &inst.groups[z], x, y, r)
            };
            used.push((merged, copies as usize));
        }
    }
    expand_columns(inst, used.iter().map(|(c, n)| (c, *n)))
}

/// Largest `g` with every cost a multiple of `g` at 1e-6 resolution.
pub fn cost_multiple(instance: &Instance) -> Option<f64> {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut g = 0u64;
    for grp in &instance.groups {
        for c in &grp.components {
            g = gcd(g, (c.cost * 1e6).round() as u64);
        }
    }
    let g = g as f64 * 1e-6;
    (g >= 1e-3).then_some(g)
}

/// Rounds a bound up to the next multiple of `g`.
pub fn tighten(bound: f64, g: Option<f64>) -> f64 {
    match g {
        Some(g) if bound.is_finite() => g * (bound / g - 1e-6).ceil(),
        _ => bound,
    }
}

#[derive(Clone, Debug)]
pub struct BpConfig {
    pub early_branching: bool,
    pub rmp_heuristic: bool,
    pub farley: bool,
    /// Price all groups concurrently each round.
    pub parallel: bool,
    pub integer_rmp_time: Duration,
    /// Known feasible schedule used as incumbent and initial columns.
    pub initial: Option<Schedule>,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            early_branching: true,
            rmp_heuristic: true,
            farley: true,
            parallel: false,
            integer_rmp_time: Duration::from_secs(5),
            initial: None,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    rows: Vec<usize>,
    bound: f64,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then_with(|| o.id.cmp(&self.id))
    }
}

enum NodeEnd {
    Infeasible,
    Pruned,
    /// Column generation stopped (converged or early); `lambda` is the last
    /// RMP solution.
    Done { lambda: Vec<f64>, objective: f64 },
    Limit,
}

struct Search<'a> {
    inst: &'a Instance,
    limits: &'a SolveLimits,
    cfg: &'a BpConfig,
    start: Instant,
    master: MasterState,
    report: SolveReport,
    incumbent: Option<(f64, Schedule)>,
    multiple: Option<f64>,
    heuristic_mark: usize,
}

impl<'a> Search<'a> {
    fn remaining(&self) -> Option<Duration> {
        self.limits
            .time_limit
            .map(|t| t.saturating_sub(self.start.elapsed()))
    }

    fn out_of_time(&self) -> bool {
        self.remaining().is_some_and(|r| r.is_zero())
    }

    fn c_imp(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0)
    }

    fn prunable(&self, bound: f64) -> bool {
        let c = self.c_imp();
        c.is_finite() && (bound >= c - 1e-9 || rmp_gap(c, bound) <= self.limits.gap_tol)
    }

    fn offer(&mut self, schedule: Schedule) {
        let cost = schedule.cost(self.inst);
        if cost < self.c_imp() - 1e-9 {
            debug_assert!(crate::model::validate_schedule(self.inst, &schedule)
                .map(|v| v.is_empty())
                .unwrap_or(false));
            self.incumbent = Some((cost, schedule));
        }
    }

    fn trace(&mut self, node: usize, kind: BoundKind, value: f64) {
        self.report.bound_trace.push(BoundRecord { node, kind, value });
    }

    /// Prices one group in limited then exact mode.
    fn price_group(
        &self,
        z: usize,
        duals: &DualBundle,
        farkas: bool,
        stop_rhs: Option<f64>,
    ) -> Result<(PricingResult, f64, f64), PricingError> {
        let decisions = self.master.active_decisions(z);
        let mut p = build_pricing(self.inst, z, duals, &decisions, farkas)?;
        if let Some(rhs) = stop_rhs {
            p.add_objective_cut(rhs);
        }
        let t0 = Instant::now();
        let r = solve_pricing(
            self.inst,
            &p,
            duals,
            &decisions,
            &PricingLimits::limited(self.remaining()),
        )?;
        let limited = t0.elapsed().as_secs_f64();
        if r.column.is_some() || self.out_of_time() {
            return Ok((r, limited, 0.0));
        }
        let t1 = Instant::now();
        let mut e = solve_pricing(
            self.inst,
            &p,
            duals,
            &decisions,
            &PricingLimits::exact(self.remaining()),
        )?;
        e.bound = e.bound.max(r.bound);
        Ok((e, limited, t1.elapsed().as_secs_f64()))
    }

    /// One pricing round. Returns the number of columns added and, when every
    /// group was priced, the per-group bounds.
    fn pricing_round(
        &mut self,
        duals: &DualBundle,
        farkas: bool,
        stop_rhs: Option<f64>,
    ) -> Result<(usize, Option<Vec<f64>>, bool), SolveError> {
        let order = jit_ordering(self.inst, duals);
        let ng = self.inst.groups.len();
        let mut w = vec![f64::NEG_INFINITY; ng];
        let mut complete = true;
        let mut added = 0;
        let results: Vec<(usize, PricingResult, f64, f64)> = if self.cfg.parallel && ng > 1 {
            let this = &*self;
            let mut all = par::map(&order, |&z| {
                this.price_group(z, duals, farkas, stop_rhs)
                    .map(|(r, a, b)| (z, r, a, b))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(pricing_err)?;
            // Keep what the sequential loop would have kept, so both modes
            // take the same path.
            if let Some(first) = all.iter().position(|r| r.1.column.is_some()) {
                all.truncate(first + 1);
            }
            all
        } else {
            let mut out = Vec::new();
            for &z in &order {
                let (r, a, b) = self.price_group(z, duals, farkas, stop_rhs).map_err(pricing_err)?;
                let found = r.column.is_some();
                out.push((z, r, a, b));
                if found || self.out_of_time() {
                    break;
                }
            }
            out
        };
        let mut results = results;
        results.sort_by_key(|r| r.0);
        let mut priced = vec![false; ng];
        for (z, r, limited, exact) in results {
            self.report.breakdown.other += limited;
            self.report.breakdown.exact_pricing += exact;
            priced[z] = true;
            w[z] = r.bound;
            if !r.proven && r.column.is_none() {
                complete = false;
            }
            if let Some(pc) = r.column {
                let before = self.master.columns().len();
                self.master
                    .add_column(pc.column)
                    .map_err(|e| SolveError::Lp(crate::lp::LpError::Malformed(e)))?;
                if self.master.columns().len() > before {
                    added += 1;
                }
            }
        }
        self.report.pricing_rounds += 1;
        let all = priced.iter().all(|&p| p);
        Ok((added, all.then_some(w), complete))
    }

    /// Certified Farley bound: the min lambda price over the pool scales the
    /// demand prices; one exact pricing of the scaled prices corrects the
    /// bound for columns outside the pool.
    fn farley(&mut self, duals: &DualBundle) -> Result<Option<f64>, SolveError> {
        let cols = self.master.columns().to_vec();
        let Some(l) = min_lambda_price(&duals.pi, &cols) else {
            return Ok(None);
        };
        let raw = farley_bound(&duals.pi, &cols, &self.inst.demand).expect("price exists");
        let scaled = DualBundle {
            pi: duals.pi.iter().map(|p| p * l).collect(),
            theta: vec![0.0],
            gamma: Vec::new(),
        };
        let p = build_pricing(self.inst, 0, &scaled, &[], false).map_err(pricing_err)?;
        let t = Instant::now();
        let r = solve_pricing(self.inst, &p, &scaled, &[], &PricingLimits::exact(self.remaining()))
            .map_err(pricing_err)?;
        self.report.breakdown.exact_pricing += t.elapsed().as_secs_f64();
        let z = self.inst.groups[0].multiplicity as f64;
        Ok(Some(raw + z * r.bound.min(0.0)))
    }

    fn column_generation(&mut self, node: &Node, lb: &mut f64, rounds: &mut usize) -> Result<NodeEnd, SolveError> {
        let mults: Vec<usize> = self.inst.groups.iter().map(|g| g.multiplicity).collect();
        loop {
            if self.out_of_time() {
                return Ok(NodeEnd::Limit);
            }
            let t = Instant::now();
            let out = self.master.solve_rmp()?;
            self.report.breakdown.rmp_resolve += t.elapsed().as_secs_f64();
            match out {
                RmpOutcome::Infeasible(farkas) => {
                    let (added, _, complete) = self.pricing_round(&farkas, true, None)?;
                    *rounds += 1;
                    self.report.farkas_rounds += 1;
                    if added == 0 {
                        if self.out_of_time() || !complete {
                            return Ok(NodeEnd::Limit);
                        }
                        return Ok(NodeEnd::Infeasible);
                    }
                }
                RmpOutcome::Optimal(sol) => {
                    let c_rmp = sol.objective;
                    let single = self.inst.groups.len() == 1;
                    let stop_rhs = if single {
                        early_stop_cut(self.c_imp(), c_rmp, mults[0])
                    } else {
                        None
                    };
                    let (added, w, complete) = self.pricing_round(&sol.duals, false, stop_rhs)?;
                    *rounds += 1;
                    if let Some(w) = &w {
                        let lag = lagrangian_bound(c_rmp, w, &mults);
                        self.trace(node.id, BoundKind::Lagrangian, lag);
                        *lb = lb.max(lag);
                    }
                    if added == 0 && complete {
                        self.trace(node.id, BoundKind::Master, c_rmp);
                        *lb = lb.max(c_rmp);
                    }
                    if added > 0 && single && self.cfg.farley && !self.prunable(*lb) {
                        if let Some(f) = self.farley(&sol.duals)? {
                            self.trace(node.id, BoundKind::Farley, f);
                            *lb = lb.max(f);
                        }
                    }
                    let tight = tighten(*lb, self.multiple);
                    if tight > *lb {
                        self.trace(node.id, BoundKind::Tightened, tight);
                        *lb = tight;
                    }
                    if self.prunable(*lb) {
                        return Ok(NodeEnd::Pruned);
                    }
                    if added == 0 {
                        if !complete {
                            return Ok(NodeEnd::Limit);
                        }
                        return Ok(NodeEnd::Done {
                            lambda: sol.lambda,
                            objective: c_rmp,
                        });
                    }
                    if self.cfg.early_branching
                        && *rounds >= EARLY_BRANCH_MIN_ROUNDS
                        && self.multiple.is_some()
                        && tighten(c_rmp, self.multiple) <= *lb + 1e-9
                    {
                        let t = Instant::now();
                        let out = self.master.solve_rmp()?;
                        self.report.breakdown.rmp_resolve += t.elapsed().as_secs_f64();
                        if let RmpOutcome::Optimal(s) = out {
                            return Ok(NodeEnd::Done {
                                lambda: s.lambda,
                                objective: s.objective,
                            });
                        }
                    }
                }
            }
        }
    }

    fn run_heuristic(&mut self) -> Result<(), SolveError> {
        let pool = self.master.columns().len();
        if !self.cfg.rmp_heuristic || pool == 0 || pool < self.heuristic_mark {
            return Ok(());
        }
        let t = Instant::now();
        let time = self
            .remaining()
            .map_or(self.cfg.integer_rmp_time, |r| r.min(self.cfg.integer_rmp_time));
        let c = self.c_imp();
        let found = self.master.solve_integer_rmp(&IntegerRmpLimits {
            time: Some(time),
            solutions: 1,
            nodes: usize::MAX,
            cutoff: c.is_finite().then_some(c),
        })?;
        self.report.breakdown.integer_rmp += t.elapsed().as_secs_f64();
        match found {
            Some((lambda, _)) => {
                let s = self.master.expand(&lambda);
                self.offer(s);
            }
            None => self.heuristic_mark = pool + RMP_HEURISTIC_COLUMNS,
        }
        Ok(())
    }
}

fn pricing_err(e: PricingError) -> SolveError {
    match e {
        PricingError::Lp(l) => SolveError::Lp(l),
        other => SolveError::Lp(crate::lp::LpError::Malformed(other.to_string())),
    }
}

/// Exact branch-and-price. Nodes are explored best-bound first (down child
/// before up child on ties).
pub fn solve_bp(instance: &Instance, limits: &SolveLimits, config: &BpConfig) -> Result<SolveOutcome, SolveError> {
    instance.validate()?;
    let start = Instant::now();
    let mut s = Search {
        inst: instance,
        limits,
        cfg: config,
        start,
        master: MasterState::new(instance),
        report: SolveReport::new(Method::Dw),
        incumbent: None,
        multiple: cost_multiple(instance),
        heuristic_mark: 0,
    };
    if let Some(init) = &config.initial {
        for m in &init.machines {
            let c = Column::new(m.group, &instance.groups[m.group], m.x.clone(), m.y.clone(), m.r.clone());
            s.master
                .add_column(c)
                .map_err(|e| SolveError::Lp(crate::lp::LpError::Malformed(e)))?;
        }
        s.offer(init.clone());
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        parent: None,
        depth: 0,
        rows: Vec::new(),
        bound: 0.0,
    });
    let mut next_id = 1;
    let mut lost = f64::INFINITY;
    let mut stopped = false;

    while let Some(node) = heap.pop() {
        if s.prunable(node.bound) {
            s.report.node_trace.push(NodeRecord {
                id: node.id,
                parent: node.parent,
                depth: node.depth,
                bound: node.bound,
                rounds: 0,
                columns: s.master.columns().len(),
                status: NodeStatus::Pruned,
            });
            if node.bound < s.c_imp() {
                lost = lost.min(node.bound);
            }
            continue;
        }
        if s.out_of_time() || limits.node_limit.is_some_and(|n| s.report.nodes >= n) {
            heap.push(node);
            stopped = true;
            break;
        }
        let global = heap.iter().map(|n| n.bound).fold(node.bound, f64::min).min(lost);
        s.trace(node.id, BoundKind::Global, global);
        s.report.nodes += 1;
        s.master.set_active(&node.rows);
        let mut lb = node.bound;
        let mut rounds = 0;
        let end = s.column_generation(&node, &mut lb, &mut rounds)?;
        let mut record = NodeRecord {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            bound: lb,
            rounds,
            columns: s.master.columns().len(),
            status: NodeStatus::Pruned,
        };
        match end {
            NodeEnd::Infeasible => record.status = NodeStatus::Infeasible,
            NodeEnd::Pruned => {
                if lb < s.c_imp() {
                    lost = lost.min(lb);
                }
            }
            NodeEnd::Limit => {
                record.status = NodeStatus::Limit;
                lost = lost.min(lb);
                stopped = true;
                s.report.node_trace.push(record);
                break;
            }
            NodeEnd::Done { lambda, objective } => {
                s.run_heuristic()?;
                match check_integrality(&s.master, &lambda) {
                    Integrality::Satisfied => {
                        record.status = NodeStatus::Integral;
                        let sched = repair_step(&s.master, &lambda);
                        debug_assert!((sched.cost(instance) - objective).abs() < 1e-6 * objective.max(1.0));
                        s.offer(sched);
                    }
                    Integrality::Violated { group } => {
                        if s.prunable(lb) {
                            lost = lost.min(lb);
                        } else {
                            let t = Instant::now();
                            let cand = find_branching(&s.master, &lambda, group)
                                .expect("a violated group always has a fractional threshold set");
                            let (down, up) = apply_branching(&mut s.master, &cand);
                            s.report.breakdown.branching += t.elapsed().as_secs_f64();
                            record.status = NodeStatus::Branched;
                            for (i, row) in [down, up].into_iter().enumerate() {
                                let mut rows = node.rows.clone();
                                rows.push(row);
                                heap.push(Node {
                                    id: next_id + i,
                                    parent: Some(node.id),
                                    depth: node.depth + 1,
                                    rows,
                                    bound: lb,
                                });
                            }
                            next_id += 2;
                        }
                    }
                }
            }
        }
        s.report.node_trace.push(record);
        if let Some(c) = s.incumbent.as_ref().map(|i| i.0) {
            let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min).min(lost);
            if open.is_finite() && rmp_gap(c, tighten(open, s.multiple)) <= limits.gap_tol {
                lost = lost.min(open);
                stopped = heap.iter().any(|n| !s.prunable(n.bound));
                break;
            }
        }
    }

    let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min).min(lost);
    let mut report = s.report;
    report.columns = s.master.columns().len();
    let schedule = s.incumbent.as_ref().map(|i| i.1.clone());
    match &s.incumbent {
        Some((c, _)) => {
            let dual = tighten(open, s.multiple).min(*c);
            report.primal_bound = Some(*c);
            report.dual_bound = Some(dual);
            report.status = if !stopped || rmp_gap(*c, dual) <= limits.gap_tol {
                SolveStatus::Optimal
            } else {
                SolveStatus::Limit
            };
        }
        None => {
            if stopped {
                report.status = SolveStatus::Limit;
                report.dual_bound = open.is_finite().then_some(open);
            } else if lost.is_finite() {
                report.status = SolveStatus::Limit;
                report.dual_bound = Some(lost);
            } else {
                report.status = SolveStatus::Infeasible;
            }
        }
    }
    report.set_gap();
    report.wall_time = start.elapsed().as_secs_f64();
    let accounted = report.breakdown.total();
    report.breakdown.other += (report.wall_time - accounted).max(0.0);
    Ok(SolveOutcome { report, schedule })
}
