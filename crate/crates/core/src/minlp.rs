//! Branch-and-bound over integer variables with outer-approximation cuts for
//! concave rows `target <= f(args) + M*x`.

use crate::lp::{LpError, LpProblem, LpStatus, Relation, Simplex};
use crate::model::FuncSpec;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

pub const INT_TOL: f64 = 1e-6;
pub const MAX_CUTS_PER_ROW: usize = 200;
const LP_ITER_LIMIT: usize = 200_000;
const MAX_OA_ROUNDS: usize = 400;
/// Violation accepted when the cut loop stops making progress.
const STALL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arg {
    Var(usize),
    Const(f64),
}

/// `target <= func(args) + big_m * relax_var`.
#[derive(Clone, Debug)]
pub struct NonlinearRow {
    pub target: usize,
    pub func: FuncSpec,
    /// Flat argument layout `[prev, production, peer_0, ..]`.
    pub args: Vec<Arg>,
    /// Upper corner of the function's domain (same layout); inputs are
    /// clamped into `[0, upper]`.
    pub upper: Vec<f64>,
    pub relax: Option<(usize, f64)>,
}

impl NonlinearRow {
    fn point(&self, x: &[f64]) -> Vec<f64> {
        self.args
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let v = match *a {
                    Arg::Var(j) => x[j],
                    Arg::Const(c) => c,
                };
                v.max(0.0).min(self.upper.get(i).copied().unwrap_or(f64::INFINITY))
            })
            .collect()
    }

    /// Right-hand side `f(args) + M*x` at `x`.
    pub fn bound_at(&self, x: &[f64]) -> f64 {
        let u = self.point(x);
        let mut v = self.func.eval_in(&u, &self.upper);
        if let Some((b, m)) = self.relax {
            v += m * x[b];
        }
        v
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        x[self.target] - self.bound_at(x)
    }

    /// Tangent cut at `x` as `(coeffs, rhs)` meaning `coeffs . vars <= rhs`.
    pub fn cut(&self, x: &[f64]) -> (Vec<(usize, f64)>, f64) {
        let u = self.point(x);
        let f0 = self.func.eval_in(&u, &self.upper);
        let mut g = vec![0.0; u.len().max(self.func.arity())];
        let mut uu = u.clone();
        uu.resize(g.len(), 0.0);
        self.func.grad_in(&uu, &self.upper, &mut g);
        let mut coeffs: Vec<(usize, f64)> = vec![(self.target, 1.0)];
        let mut rhs = f0;
        for (i, a) in self.args.iter().enumerate() {
            if let Arg::Var(j) = *a {
                if g[i] != 0.0 {
                    coeffs.push((j, -g[i]));
                    rhs -= g[i] * u[i];
                }
            }
        }
        if let Some((b, m)) = self.relax {
            coeffs.push((b, -m));
        }
        coeffs.sort_by_key(|c| c.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, v) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        (merged, rhs)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvexMinlp {
    pub lp: LpProblem,
    /// 0/1 variables.
    pub binaries: Vec<usize>,
    /// General integer variables (bounded).
    pub integers: Vec<usize>,
    pub nonlinear: Vec<NonlinearRow>,
}

impl ConvexMinlp {
    fn integer_vars(&self) -> Vec<usize> {
        self.binaries.iter().chain(&self.integers).copied().collect()
    }

    /// Maximum violation of nonlinear rows at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.nonlinear
            .iter()
            .map(|r| r.violation(x))
            .fold(0.0, f64::max)
    }
}

/// Appends the tangent cut of `row` at `point` and returns the row index.
pub fn add_oa_cut(relaxation: &mut LpProblem, row: &NonlinearRow, point: &[f64]) -> usize {
    let (coeffs, rhs) = row.cut(point);
    relaxation.add_row(coeffs, Relation::Le, rhs)
}

#[derive(Clone, Debug)]
pub struct MinlpLimits {
    /// Relative gap `(primal - dual) / max(1, |primal|)` at which to stop.
    pub gap: f64,
    pub solutions: usize,
    pub nodes: usize,
    pub time: Option<Duration>,
    /// Target violation of nonlinear rows.
    pub feas_tol: f64,
}

impl Default for MinlpLimits {
    fn default() -> Self {
        MinlpLimits {
            gap: 1e-9,
            solutions: usize::MAX,
            nodes: usize::MAX,
            time: None,
            feas_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinlpStatus {
    Optimal,
    Infeasible,
    Limit,
}

#[derive(Clone, Debug)]
pub struct MinlpResult {
    pub status: MinlpStatus,
    pub incumbent: Option<Vec<f64>>,
    /// `+inf` without an incumbent.
    pub primal_bound: f64,
    pub dual_bound: f64,
    pub nodes: usize,
    pub cuts: usize,
    pub solutions: usize,
    pub lp_iterations: usize,
}

impl MinlpResult {
    pub fn gap(&self) -> f64 {
        if !self.primal_bound.is_finite() {
            return f64::INFINITY;
        }
        ((self.primal_bound - self.dual_bound) / self.primal_bound.abs().max(1.0)).max(0.0)
    }
}

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    bound: f64,
    bounds: Vec<(usize, f64, f64)>,
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
    // Max-heap: smallest bound first, then oldest node.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound
            .total_cmp(&self.bound)
            .then_with(|| o.id.cmp(&self.id))
    }
}

struct Relaxation<'a> {
    m: &'a ConvexMinlp,
    lp: Simplex,
    base_rows: usize,
    /// Owning nonlinear row of each cut, in LP row order after the base rows.
    cut_owner: Vec<usize>,
    cuts_per_row: Vec<usize>,
    cuts_added: usize,
    lp_iterations: usize,
}

enum NodeOutcome {
    Infeasible,
    Solved { bound: f64, x: Vec<f64>, converged: bool },
    LpLimit,
}

impl<'a> Relaxation<'a> {
    fn new(m: &'a ConvexMinlp) -> Result<Self, LpError> {
        let lp = Simplex::new(&m.lp)?;
        let base_rows = m.lp.rows.len();
        let mut r = Relaxation {
            m,
            lp,
            base_rows,
            cut_owner: Vec::new(),
            cuts_per_row: vec![0; m.nonlinear.len()],
            cuts_added: 0,
            lp_iterations: 0,
        };
        // Seed each row with a tangent at the middle of its variable box.
        let mid: Vec<f64> = (0..m.lp.num_vars())
            .map(|j| {
                let (lo, hi) = (m.lp.lower[j], m.lp.upper[j]);
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo,
                    (false, true) => hi,
                    _ => 0.0,
                }
            })
            .collect();
        for i in 0..m.nonlinear.len() {
            r.add_cut(i, &mid);
        }
        Ok(r)
    }

    fn add_cut(&mut self, i: usize, x: &[f64]) {
        if self.cuts_per_row[i] >= MAX_CUTS_PER_ROW {
            // Drop the oldest non-binding cut of this row.
            let pos = self
                .cut_owner
                .iter()
                .enumerate()
                .find(|&(p, &o)| o == i && self.lp.row_is_basic(self.base_rows + p))
                .map(|(p, _)| p);
            let Some(p) = pos else { return };
            self.lp.remove_rows(&[self.base_rows + p]);
            self.cut_owner.remove(p);
            self.cuts_per_row[i] -= 1;
        }
        let (coeffs, rhs) = self.m.nonlinear[i].cut(x);
        self.lp.add_row(&coeffs, Relation::Le, rhs);
        self.cut_owner.push(i);
        self.cuts_per_row[i] += 1;
        self.cuts_added += 1;
    }

    /// Drops non-binding cuts once the pool outgrows a few cuts per row.
    fn purge(&mut self) {
        let limit = 2 * self.m.nonlinear.len() + 50;
        if self.cut_owner.len() <= limit {
            return;
        }
        let drop: Vec<usize> = (0..self.cut_owner.len())
            .filter(|&p| self.lp.row_is_basic(self.base_rows + p))
            .collect();
        if drop.is_empty() {
            return;
        }
        let rows: Vec<usize> = drop.iter().map(|&p| self.base_rows + p).collect();
        self.lp.remove_rows(&rows);
        for &p in drop.iter().rev() {
            let i = self.cut_owner.remove(p);
            self.cuts_per_row[i] -= 1;
        }
    }

    fn solve_node(
        &mut self,
        root_bounds: &[(usize, f64, f64)],
        node_bounds: &[(usize, f64, f64)],
        cutoff: f64,
        feas_tol: f64,
    ) -> Result<NodeOutcome, LpError> {
        self.purge();
        for &(j, lo, hi) in root_bounds {
            self.lp.set_col_bounds(j, lo, hi);
        }
        for &(j, lo, hi) in node_bounds {
            self.lp.set_col_bounds(j, lo, hi);
        }
        let mut last_bound = f64::NEG_INFINITY;
        let mut stall = 0;
        for _round in 0..MAX_OA_ROUNDS {
            let sol = self.lp.solve(LP_ITER_LIMIT)?;
            self.lp_iterations += sol.iterations;
            match sol.status {
                LpStatus::Infeasible => return Ok(NodeOutcome::Infeasible),
                LpStatus::Optimal => {}
                _ => return Ok(NodeOutcome::LpLimit),
            }
            let bound = sol.objective;
            if bound >= cutoff {
                return Ok(NodeOutcome::Solved {
                    bound,
                    x: sol.primal,
                    converged: false,
                });
            }
            let x = sol.primal;
            let mut violated: Vec<(usize, f64)> = self
                .m
                .nonlinear
                .iter()
                .enumerate()
                .map(|(i, r)| (i, r.violation(&x)))
                .filter(|&(_, v)| v > feas_tol)
                .collect();
            if violated.is_empty() {
                return Ok(NodeOutcome::Solved {
                    bound,
                    x,
                    converged: true,
                });
            }
            if bound <= last_bound + 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            last_bound = bound;
            if stall > 50 {
                let converged = self.m.max_violation(&x) <= STALL_TOL;
                return Ok(NodeOutcome::Solved { bound, x, converged });
            }
            violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (i, _) in violated {
                self.add_cut(i, &x);
            }
        }
        // Out of rounds: the last LP value is still a valid bound.
        let sol = self.lp.solve(LP_ITER_LIMIT)?;
        match sol.status {
            LpStatus::Optimal => Ok(NodeOutcome::Solved {
                bound: sol.objective,
                converged: self.m.max_violation(&sol.primal) <= STALL_TOL,
                x: sol.primal,
            }),
            LpStatus::Infeasible => Ok(NodeOutcome::Infeasible),
            _ => Ok(NodeOutcome::LpLimit),
        }
    }
}

fn most_fractional(ints: &[usize], x: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &j in ints {
        let v = x[j];
        let f = (v - v.floor()).min(v.ceil() - v);
        if f > INT_TOL && best.is_none_or(|(_, _, bf)| f > bf + 1e-12) {
            best = Some((j, v, f));
        }
    }
    best.map(|(j, v, _)| (j, v))
}

/// Solves a convex MINLP to the requested limits. Node order is best-bound
/// with ties by creation order; the branching variable is the most
/// fractional one, ties by position in the integer lists.
pub fn solve_minlp(
    m: &ConvexMinlp,
    limits: &MinlpLimits,
    objective_cutoff: Option<f64>,
) -> Result<MinlpResult, LpError> {
    let start = Instant::now();
    let ints = m.integer_vars();
    let root_bounds: Vec<(usize, f64, f64)> =
        ints.iter().map(|&j| (j, m.lp.lower[j], m.lp.upper[j])).collect();
    let mut rel = Relaxation::new(m)?;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        bounds: Vec::new(),
    });
    let mut next_id = 1;
    let mut primal = f64::INFINITY;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut solutions = 0;
    let mut nodes = 0;
    // Lowest bound among nodes discarded without proving them dominated by
    // the incumbent (cutoff, gap pruning, unconverged leaves).
    let mut lost = f64::INFINITY;
    let cutoff = objective_cutoff.unwrap_or(f64::INFINITY);
    let mut stopped = false;

    while let Some(node) = heap.pop() {
        let threshold = primal.min(cutoff);
        if node.bound >= threshold {
            if node.bound < primal {
                lost = lost.min(node.bound);
            }
            continue;
        }
        let open_min = node.bound.min(lost);
        if primal.is_finite() && (primal - open_min) / primal.abs().max(1.0) <= limits.gap {
            lost = lost.min(node.bound);
            heap.push(node);
            stopped = true;
            break;
        }
        if nodes >= limits.nodes
            || solutions >= limits.solutions
            || limits.time.is_some_and(|t| start.elapsed() >= t)
        {
            heap.push(node);
            stopped = true;
            break;
        }
        nodes += 1;
        let out = rel.solve_node(&root_bounds, &node.bounds, threshold, limits.feas_tol)?;
        let (bound, x, converged) = match out {
            NodeOutcome::Infeasible => continue,
            NodeOutcome::LpLimit => {
                lost = lost.min(node.bound);
                continue;
            }
            NodeOutcome::Solved { bound, x, converged } => (bound.max(node.bound), x, converged),
        };
        if bound >= threshold {
            if bound < primal {
                lost = lost.min(bound);
            }
            continue;
        }
        match most_fractional(&ints, &x) {
            None if converged => {
                if bound < primal {
                    primal = bound;
                    incumbent = Some(x);
                    solutions += 1;
                }
            }
            None => {
                // Integral but the continuous part did not converge: the
                // bound stays valid, the point cannot be used.
                lost = lost.min(bound);
            }
            Some((j, v)) => {
                let (lo, hi) = node
                    .bounds
                    .iter()
                    .rev()
                    .find(|b| b.0 == j)
                    .map(|b| (b.1, b.2))
                    .unwrap_or((m.lp.lower[j], m.lp.upper[j]));
                let mut down = node.bounds.clone();
                down.push((j, lo, v.floor()));
                let mut up = node.bounds;
                up.push((j, v.ceil(), hi));
                heap.push(Node {
                    id: next_id,
                    bound,
                    bounds: down,
                });
                heap.push(Node {
                    id: next_id + 1,
                    bound,
                    bounds: up,
                });
                next_id += 2;
            }
        }
    }

    let open_min = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let dual = primal.min(open_min).min(lost);
    let status = if incumbent.is_some() {
        let gap = (primal - dual) / primal.abs().max(1.0);
        if gap <= limits.gap.max(1e-9) || (!stopped && !lost.is_finite()) {
            MinlpStatus::Optimal
        } else {
            MinlpStatus::Limit
        }
    } else if stopped || lost.is_finite() {
        MinlpStatus::Limit
    } else {
        MinlpStatus::Infeasible
    };
    Ok(MinlpResult {
        status,
        incumbent,
        primal_bound: primal,
        dual_bound: dual,
        nodes,
        cuts: rel.cuts_added,
        solutions,
        lp_iterations: rel.lp_iterations,
    })
}
