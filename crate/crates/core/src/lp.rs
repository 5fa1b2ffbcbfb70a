//! Dense revised simplex for small LPs that are re-solved many times.
//!
//! Rows are stored as `a.x - s = 0` with the slack `s` carrying the row bounds,
//! so changing a right-hand side or switching a row off is a bound change.
//! Duals follow the minimization convention: `>=` rows get `y >= 0`,
//! `<=` rows get `y <= 0`.

use std::fmt::Write as _;
use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-6;
pub const OPT_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-9;
const WORK_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 1000;
/// Bound relaxation of the two-pass ratio tests.
const HARRIS_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c.x` subject to rows and column bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, relation, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors differ in length".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::Malformed(format!("objective {j} not finite")));
            }
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::Malformed(format!("column {j} has lower > upper")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} rhs not finite")));
            }
            for &(j, v) in &r.coeffs {
                if j >= n || !v.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} bad coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump for triage.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {} rows {}", self.objective.len(), self.rows.len());
        for j in 0..self.objective.len() {
            let _ = writeln!(
                s,
                "col {j} cost {} bounds [{}, {}]",
                self.objective[j], self.lower[j], self.upper[j]
            );
        }
        for (i, r) in self.rows.iter().enumerate() {
            let op = match r.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let terms: Vec<String> = r.coeffs.iter().map(|(j, v)| format!("{v}*x{j}")).collect();
            let _ = writeln!(s, "row {i}: {} {op} {}", terms.join(" + "), r.rhs);
        }
        s
    }
}

/// Gauss-Jordan inverse of a dense row-major `k x k` matrix.
fn invert_dense(mut a: Vec<f64>, k: usize) -> Result<Vec<f64>, LpError> {
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for c in 0..k {
        let mut p = c;
        let mut best = a[c * k + c].abs();
        for r in (c + 1)..k {
            let v = a[r * k + c].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < 1e-11 {
            return Err(LpError::Singular);
        }
        if p != c {
            for j in 0..k {
                a.swap(c * k + j, p * k + j);
                inv.swap(c * k + j, p * k + j);
            }
        }
        let piv = a[c * k + c];
        for j in 0..k {
            a[c * k + j] /= piv;
            inv[c * k + j] /= piv;
        }
        for r in 0..k {
            if r != c {
                let f = a[r * k + c];
                if f != 0.0 {
                    for j in 0..k {
                        a[r * k + j] -= f * a[c * k + j];
                        inv[r * k + j] -= f * inv[c * k + j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

pub fn relation_bounds(rel: Relation, rhs: f64) -> (f64, f64) {
    match rel {
        Relation::Le => (f64::NEG_INFINITY, rhs),
        Relation::Ge => (rhs, f64::INFINITY),
        Relation::Eq => (rhs, rhs),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One dual per row.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Row weights proving infeasibility; present iff status is infeasible.
    pub farkas_ray: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("basis matrix is numerically singular")]
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Column,
    Slack,
    Artificial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum St {
    Basic,
    Lower,
    Upper,
    Zero,
}

#[derive(Clone, Debug)]
struct Var {
    kind: Kind,
    col: Vec<(usize, f64)>,
    cost: f64,
    lo: f64,
    hi: f64,
    x: f64,
    st: St,
    bpos: usize,
}

impl Var {
    fn place_nonbasic(&mut self, prefer_upper: bool) {
        self.bpos = usize::MAX;
        let (lf, hf) = (self.lo.is_finite(), self.hi.is_finite());
        self.st = match (lf, hf) {
            (true, true) if prefer_upper => St::Upper,
            (true, _) => St::Lower,
            (false, true) => St::Upper,
            (false, false) => St::Zero,
        };
        self.x = match self.st {
            St::Lower => self.lo,
            St::Upper => self.hi,
            _ => 0.0,
        };
    }

    fn fixed(&self) -> bool {
        self.hi - self.lo <= 0.0
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

enum DualOutcome {
    Feasible,
    Infeasible,
    NotDualFeasible,
    Limit,
}

/// Stateful, warm-startable simplex solver.
#[derive(Clone, Debug)]
pub struct Simplex {
    vars: Vec<Var>,
    cols: Vec<usize>,
    slacks: Vec<usize>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    etas: usize,
    has_basis: bool,
    phase1: bool,
    iterations: usize,
}

impl Simplex {
    pub fn new(p: &LpProblem) -> Result<Self, LpError> {
        p.validate()?;
        let mut s = Simplex {
            vars: Vec::new(),
            cols: Vec::new(),
            slacks: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            etas: 0,
            has_basis: false,
            phase1: false,
            iterations: 0,
        };
        let mut colv: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_vars()];
        for (i, r) in p.rows.iter().enumerate() {
            for &(j, v) in &r.coeffs {
                if v != 0.0 {
                    colv[j].push((i, v));
                }
            }
        }
        for (j, col) in colv.into_iter().enumerate() {
            s.push_var(Kind::Column, col, p.objective[j], p.lower[j], p.upper[j]);
        }
        for (i, r) in p.rows.iter().enumerate() {
            let (lo, hi) = relation_bounds(r.relation, r.rhs);
            s.push_var(Kind::Slack, vec![(i, -1.0)], 0.0, lo, hi);
        }
        Ok(s)
    }

    fn push_var(&mut self, kind: Kind, col: Vec<(usize, f64)>, cost: f64, lo: f64, hi: f64) -> usize {
        let mut v = Var {
            kind,
            col,
            cost,
            lo,
            hi,
            x: 0.0,
            st: St::Zero,
            bpos: usize::MAX,
        };
        v.place_nonbasic(false);
        self.vars.push(v);
        let id = self.vars.len() - 1;
        match kind {
            Kind::Column => self.cols.push(id),
            Kind::Slack => self.slacks.push(id),
            Kind::Artificial => {}
        }
        id
    }

    pub fn num_rows(&self) -> usize {
        self.slacks.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Adds a column; the current basis stays valid (primal feasibility kept).
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64, coeffs: &[(usize, f64)]) -> usize {
        let col: Vec<(usize, f64)> = coeffs.iter().copied().filter(|&(_, v)| v != 0.0).collect();
        self.push_var(Kind::Column, col, cost, lower, upper);
        self.cols.len() - 1
    }

    /// Adds a row; its slack enters the basis so the factorization extends
    /// without a refactorization.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], relation: Relation, rhs: f64) -> usize {
        let i = self.slacks.len();
        let m = i;
        for &(j, v) in coeffs {
            if v != 0.0 {
                let id = self.cols[j];
                self.vars[id].col.push((i, v));
            }
        }
        let (lo, hi) = relation_bounds(relation, rhs);
        let sid = self.push_var(Kind::Slack, vec![(i, -1.0)], 0.0, lo, hi);
        let activity: f64 = coeffs.iter().map(|&(j, v)| v * self.vars[self.cols[j]].x).sum();
        if self.has_basis {
            // New inverse: [[B^-1, 0], [c_B^T B^-1, -1]].
            let mut cb = vec![0.0; m];
            for &(j, v) in coeffs {
                let id = self.cols[j];
                if self.vars[id].st == St::Basic {
                    cb[self.vars[id].bpos] += v;
                }
            }
            let mut newrow = vec![0.0; m + 1];
            for r in 0..m {
                if cb[r] != 0.0 {
                    let row = &self.binv[r * m..(r + 1) * m];
                    for (k, &b) in row.iter().enumerate() {
                        newrow[k] += cb[r] * b;
                    }
                }
            }
            newrow[m] = -1.0;
            let mut nb = vec![0.0; (m + 1) * (m + 1)];
            for r in 0..m {
                nb[r * (m + 1)..r * (m + 1) + m].copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            }
            nb[m * (m + 1)..].copy_from_slice(&newrow);
            self.binv = nb;
        }
        let v = &mut self.vars[sid];
        v.st = St::Basic;
        v.bpos = m;
        v.x = activity;
        self.basis.push(sid);
        if !self.has_basis {
            self.binv.clear();
        }
        i
    }

    pub fn set_row_bounds(&mut self, row: usize, lo: f64, hi: f64) {
        let id = self.slacks[row];
        self.set_var_bounds(id, lo, hi);
    }

    pub fn set_row(&mut self, row: usize, relation: Relation, rhs: f64) {
        let (lo, hi) = relation_bounds(relation, rhs);
        self.set_row_bounds(row, lo, hi);
    }

    pub fn set_col_bounds(&mut self, col: usize, lo: f64, hi: f64) {
        let id = self.cols[col];
        self.set_var_bounds(id, lo, hi);
    }

    pub fn col_bounds(&self, col: usize) -> (f64, f64) {
        let v = &self.vars[self.cols[col]];
        (v.lo, v.hi)
    }

    fn set_var_bounds(&mut self, id: usize, lo: f64, hi: f64) {
        let v = &mut self.vars[id];
        v.lo = lo;
        v.hi = hi;
        if v.st != St::Basic {
            let up = v.st == St::Upper;
            v.place_nonbasic(up);
        }
    }

    pub fn set_objective(&mut self, col: usize, cost: f64) {
        let id = self.cols[col];
        self.vars[id].cost = cost;
    }

    /// Removes rows. Rows whose slack is nonbasic force a cold restart.
    pub fn remove_rows(&mut self, rows: &[usize]) {
        if rows.is_empty() {
            return;
        }
        let m = self.slacks.len();
        let mut drop = vec![false; m];
        for &r in rows {
            drop[r] = true;
        }
        let mut remap = vec![usize::MAX; m];
        let mut next = 0;
        for i in 0..m {
            if !drop[i] {
                remap[i] = next;
                next += 1;
            }
        }
        let mut keep_basis = self.has_basis;
        for &r in rows {
            if self.vars[self.slacks[r]].st != St::Basic {
                keep_basis = false;
            }
        }
        let dead: Vec<usize> = rows.iter().map(|&r| self.slacks[r]).collect();
        for v in self.vars.iter_mut() {
            v.col.retain(|&(i, _)| !drop[i]);
            for e in v.col.iter_mut() {
                e.0 = remap[e.0];
            }
        }
        let mut is_dead = vec![false; self.vars.len()];
        for d in dead {
            is_dead[d] = true;
        }
        self.compact(|id, _| !is_dead[id]);
        if keep_basis {
            self.basis = self.basis.iter().copied().filter(|&b| b != usize::MAX).collect();
            for (p, &b) in self.basis.iter().enumerate() {
                self.vars[b].bpos = p;
            }
            if self.refactor().is_err() {
                self.has_basis = false;
            }
        } else {
            self.has_basis = false;
        }
    }

    /// Drops variables failing `keep`, remapping all indices.
    fn compact(&mut self, keep: impl Fn(usize, &Var) -> bool) {
        let mut remap = vec![usize::MAX; self.vars.len()];
        let mut nv = Vec::with_capacity(self.vars.len());
        for (id, v) in self.vars.drain(..).enumerate() {
            if keep(id, &v) {
                remap[id] = nv.len();
                nv.push(v);
            }
        }
        self.vars = nv;
        self.cols = self.cols.iter().map(|&c| remap[c]).collect();
        self.slacks = self.slacks.iter().filter_map(|&c| Some(remap[c]).filter(|&r| r != usize::MAX)).collect();
        self.basis = self
            .basis
            .iter()
            .map(|&b| remap.get(b).copied().unwrap_or(usize::MAX))
            .collect();
    }

    fn cost(&self, id: usize) -> f64 {
        let v = &self.vars[id];
        if self.phase1 {
            if v.kind == Kind::Artificial {
                1.0
            } else {
                0.0
            }
        } else if v.kind == Kind::Artificial {
            0.0
        } else {
            v.cost
        }
    }

    /// Rebuilds `B^-1`. Singleton basic columns (slacks, artificials) are
    /// eliminated directly, so only the block of the remaining basic columns
    /// on the rows without a singleton is inverted densely.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.basis.len();
        let mut single_of_row = vec![usize::MAX; m];
        let mut general = Vec::new();
        for (p, &id) in self.basis.iter().enumerate() {
            let col = &self.vars[id].col;
            if col.len() == 1 && col[0].1.abs() > 1e-11 && single_of_row[col[0].0] == usize::MAX {
                single_of_row[col[0].0] = p;
            } else {
                general.push(p);
            }
        }
        let rows_j: Vec<usize> = (0..m).filter(|&i| single_of_row[i] == usize::MAX).collect();
        if rows_j.len() != general.len() {
            return Err(LpError::Singular);
        }
        let k = general.len();
        let mut jidx = vec![usize::MAX; m];
        for (a, &i) in rows_j.iter().enumerate() {
            jidx[i] = a;
        }
        let mut cj = vec![0.0; k * k];
        for (b, &p) in general.iter().enumerate() {
            for &(i, v) in &self.vars[self.basis[p]].col {
                if jidx[i] != usize::MAX {
                    cj[jidx[i] * k + b] = v;
                }
            }
        }
        let cinv = invert_dense(cj, k)?;
        let mut binv = vec![0.0; m * m];
        for (b, &p) in general.iter().enumerate() {
            for (a, &i) in rows_j.iter().enumerate() {
                binv[p * m + i] = cinv[b * k + a];
            }
        }
        for i in 0..m {
            let q = single_of_row[i];
            if q != usize::MAX {
                let d = self.vars[self.basis[q]].col[0].1;
                binv[q * m + i] = 1.0 / d;
            }
        }
        for (b, &p) in general.iter().enumerate() {
            for &(i, v) in &self.vars[self.basis[p]].col {
                let q = single_of_row[i];
                if q == usize::MAX {
                    continue;
                }
                let f = -v / self.vars[self.basis[q]].col[0].1;
                for (a, &jr) in rows_j.iter().enumerate() {
                    binv[q * m + jr] += f * cinv[b * k + a];
                }
            }
        }
        self.binv = binv;
        self.etas = 0;
        Ok(())
    }

    fn compute_xb(&mut self) {
        let m = self.basis.len();
        let mut rhs = vec![0.0; m];
        for v in &self.vars {
            if v.st != St::Basic && v.x != 0.0 {
                for &(i, a) in &v.col {
                    rhs[i] -= a * v.x;
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let val: f64 = row.iter().zip(&rhs).map(|(b, q)| b * q).sum();
            let id = self.basis[r];
            self.vars[id].x = val;
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.basis.len();
        let mut y = vec![0.0; m];
        for r in 0..m {
            let c = self.cost(self.basis[r]);
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    fn reduced(&self, id: usize, y: &[f64]) -> f64 {
        let mut d = self.cost(id);
        for &(i, a) in &self.vars[id].col {
            d -= y[i] * a;
        }
        d
    }

    fn ftran(&self, id: usize) -> Vec<f64> {
        let m = self.basis.len();
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.vars[id].col {
            for r in 0..m {
                alpha[r] += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, alpha: &[f64], entering: usize) {
        let m = self.basis.len();
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for (i, &ai) in alpha.iter().enumerate() {
            if i == r || ai == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                let o = (i - r - 1) * m;
                &mut after[o..o + m]
            };
            for (x, p) in row.iter_mut().zip(prow.iter()) {
                *x -= ai * p;
            }
        }
        let leaving = self.basis[r];
        self.basis[r] = entering;
        self.vars[entering].st = St::Basic;
        self.vars[entering].bpos = r;
        self.vars[leaving].bpos = usize::MAX;
        self.etas += 1;
    }

    fn maybe_refactor(&mut self) -> Result<(), LpError> {
        if self.etas >= REFACTOR_EVERY {
            self.refactor()?;
            self.compute_xb();
        }
        Ok(())
    }

    fn primal(&mut self, limit: usize) -> Result<Outcome, LpError> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= limit {
                return Ok(Outcome::Limit);
            }
            self.maybe_refactor()?;
            let y = self.duals();
            let mut best: Option<(usize, f64, f64)> = None;
            for id in 0..self.vars.len() {
                let v = &self.vars[id];
                if v.st == St::Basic || v.fixed() {
                    continue;
                }
                let d = self.reduced(id, &y);
                let dir = match v.st {
                    St::Lower if d < -OPT_TOL => 1.0,
                    St::Upper if d > OPT_TOL => -1.0,
                    St::Zero if d.abs() > OPT_TOL => -d.signum(),
                    _ => continue,
                };
                if bland {
                    best = Some((id, dir, d));
                    break;
                }
                if best.is_none_or(|(_, _, bd)| d.abs() > bd.abs()) {
                    best = Some((id, dir, d));
                }
            }
            let Some((q, dir, _)) = best else {
                return Ok(Outcome::Optimal);
            };
            let alpha = self.ftran(q);
            let vq = &self.vars[q];
            let mut theta = if vq.lo.is_finite() && vq.hi.is_finite() {
                vq.hi - vq.lo
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, bool)> = None;
            // Step limit of each eligible row, with the bound it moves to.
            let mut limits: Vec<(usize, f64, bool, f64)> = Vec::new();
            for (r, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let v = &self.vars[self.basis[r]];
                let rate = -dir * a;
                if rate < 0.0 {
                    if v.lo.is_finite() {
                        limits.push((r, (v.x - v.lo) / -rate, false, -rate));
                    }
                } else if v.hi.is_finite() {
                    limits.push((r, (v.hi - v.x) / rate, true, rate));
                }
            }
            if bland {
                let mut best = f64::INFINITY;
                for &(r, lim, up, _) in &limits {
                    let lim = lim.max(0.0);
                    let better = lim < best - 1e-12
                        || (lim <= best + 1e-12 && leave.is_some_and(|(lr, _)| self.basis[r] < self.basis[lr]));
                    if better {
                        best = best.min(lim);
                        leave = Some((r, up));
                    }
                }
                if best < theta {
                    theta = best;
                } else {
                    leave = None;
                }
            } else {
                // Harris: relax bounds slightly, then take the largest pivot
                // among rows blocking within the relaxed step.
                let relaxed = limits
                    .iter()
                    .map(|&(_, lim, _, rate)| lim + HARRIS_TOL / rate)
                    .fold(f64::INFINITY, f64::min);
                if relaxed < theta {
                    let mut piv = 0.0;
                    for &(r, lim, up, _) in &limits {
                        if lim <= relaxed && alpha[r].abs() > piv {
                            piv = alpha[r].abs();
                            leave = Some((r, up));
                            theta = lim.max(0.0);
                        }
                    }
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            for (r, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let id = self.basis[r];
                    self.vars[id].x -= dir * a * theta;
                }
            }
            match leave {
                None => {
                    let v = &mut self.vars[q];
                    if dir > 0.0 {
                        v.st = St::Upper;
                        v.x = v.hi;
                    } else {
                        v.st = St::Lower;
                        v.x = v.lo;
                    }
                }
                Some((r, to_upper)) => {
                    self.vars[q].x += dir * theta;
                    let lid = self.basis[r];
                    self.pivot(r, &alpha, q);
                    let lv = &mut self.vars[lid];
                    if to_upper {
                        lv.st = St::Upper;
                        lv.x = lv.hi;
                    } else {
                        lv.st = St::Lower;
                        lv.x = lv.lo;
                    }
                }
            }
        }
    }

    fn dual_feasible(&self, y: &[f64]) -> bool {
        for id in 0..self.vars.len() {
            let v = &self.vars[id];
            if v.st == St::Basic || v.fixed() {
                continue;
            }
            let d = self.reduced(id, y);
            let ok = match v.st {
                St::Lower => d >= -1e-7,
                St::Upper => d <= 1e-7,
                St::Zero => d.abs() <= 1e-7,
                St::Basic => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    fn dual(&mut self, limit: usize) -> Result<DualOutcome, LpError> {
        let m = self.basis.len();
        let y0 = self.duals();
        if !self.dual_feasible(&y0) {
            return Ok(DualOutcome::NotDualFeasible);
        }
        let mut degenerate = 0usize;
        let mut bland = false;
        let start = self.iterations;
        let budget = 20 * (m + self.vars.len()) + 1000;
        loop {
            if self.iterations >= limit {
                return Ok(DualOutcome::Limit);
            }
            if self.iterations - start > budget {
                // Give up on the warm start; the caller restarts cold.
                return Ok(DualOutcome::NotDualFeasible);
            }
            self.maybe_refactor()?;
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = 0.0;
            for r in 0..m {
                let v = &self.vars[self.basis[r]];
                let tol = WORK_TOL * (1.0 + v.x.abs());
                let viol = if v.x < v.lo - tol {
                    v.lo - v.x
                } else if v.x > v.hi + tol {
                    v.x - v.hi
                } else {
                    0.0
                };
                let take = if bland {
                    viol > 0.0 && leave.is_none_or(|(lr, _)| self.basis[r] < self.basis[lr])
                } else {
                    viol > worst
                };
                if take {
                    worst = viol;
                    leave = Some((r, if v.x < v.lo { v.lo } else { v.hi }));
                }
            }
            let Some((r, target)) = leave else {
                return Ok(DualOutcome::Feasible);
            };
            let increase = self.vars[self.basis[r]].x < target;
            let y = self.duals();
            let rho = self.binv[r * m..(r + 1) * m].to_vec();
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for id in 0..self.vars.len() {
                let v = &self.vars[id];
                if v.st == St::Basic || v.fixed() {
                    continue;
                }
                let mut a = 0.0;
                for &(i, c) in &v.col {
                    a += rho[i] * c;
                }
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let ok = match v.st {
                    St::Lower => (increase && a < 0.0) || (!increase && a > 0.0),
                    St::Upper => (increase && a > 0.0) || (!increase && a < 0.0),
                    St::Zero => true,
                    St::Basic => false,
                };
                if !ok {
                    continue;
                }
                let d = self.reduced(id, &y);
                cands.push((id, d.abs() / a.abs(), a.abs()));
            }
            let mut best: Option<(usize, f64, f64)> = None;
            if bland {
                for &(id, ratio, a) in &cands {
                    let better = match best {
                        None => true,
                        Some((bid, br, _)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && id < bid),
                    };
                    if better {
                        best = Some((id, ratio, a));
                    }
                }
            } else {
                let relaxed = cands
                    .iter()
                    .map(|&(_, ratio, a)| ratio + HARRIS_TOL / a)
                    .fold(f64::INFINITY, f64::min);
                for &(id, ratio, a) in &cands {
                    if ratio <= relaxed && best.is_none_or(|(_, _, ba)| a > ba) {
                        best = Some((id, ratio, a));
                    }
                }
            }
            let Some((q, ratio, _)) = best else {
                return Ok(DualOutcome::Infeasible);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            let alpha = self.ftran(q);
            if alpha[r].abs() <= PIVOT_TOL {
                return Ok(DualOutcome::NotDualFeasible);
            }
            self.iterations += 1;
            let lid = self.basis[r];
            let delta = (self.vars[lid].x - target) / alpha[r];
            for (rr, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let id = self.basis[rr];
                    self.vars[id].x -= a * delta;
                }
            }
            self.vars[q].x += delta;
            self.pivot(r, &alpha, q);
            let lv = &mut self.vars[lid];
            lv.x = target;
            lv.st = if target == lv.lo { St::Lower } else { St::Upper };
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&id| {
            let v = &self.vars[id];
            let tol = WORK_TOL * (1.0 + v.x.abs()) + 1e-9;
            v.x >= v.lo - tol && v.x <= v.hi + tol
        })
    }

    /// Slack basis plus artificials for rows whose slack cannot hold the
    /// current activity.
    fn cold_start(&mut self) {
        self.compact(|_, v| v.kind != Kind::Artificial);
        let m = self.slacks.len();
        for v in self.vars.iter_mut() {
            v.place_nonbasic(false);
        }
        let mut act = vec![0.0; m];
        for v in &self.vars {
            if v.kind == Kind::Column && v.x != 0.0 {
                for &(i, a) in &v.col {
                    act[i] += a * v.x;
                }
            }
        }
        self.basis = vec![usize::MAX; m];
        let mut diag = vec![0.0; m];
        for i in 0..m {
            let sid = self.slacks[i];
            let (lo, hi) = (self.vars[sid].lo, self.vars[sid].hi);
            if act[i] >= lo - 1e-12 && act[i] <= hi + 1e-12 {
                let v = &mut self.vars[sid];
                v.st = St::Basic;
                v.bpos = i;
                v.x = act[i];
                self.basis[i] = sid;
                diag[i] = -1.0;
            } else {
                let b = if act[i] < lo { lo } else { hi };
                let v = &mut self.vars[sid];
                v.st = if b == lo { St::Lower } else { St::Upper };
                v.x = b;
                // a.x - s + sigma * art = 0  =>  art = (b - act) / sigma >= 0
                let sigma = if b - act[i] > 0.0 { 1.0 } else { -1.0 };
                let aid = self.push_var(Kind::Artificial, vec![(i, sigma)], 0.0, 0.0, f64::INFINITY);
                let av = &mut self.vars[aid];
                av.st = St::Basic;
                av.bpos = i;
                av.x = (b - act[i]).abs();
                self.basis[i] = aid;
                diag[i] = sigma;
            }
        }
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = 1.0 / diag[i];
        }
        self.etas = 0;
        self.has_basis = true;
    }

    fn phase1_value(&self) -> f64 {
        self.vars
            .iter()
            .filter(|v| v.kind == Kind::Artificial && v.st == St::Basic)
            .map(|v| v.x.max(0.0))
            .sum()
    }

    fn retire_artificials(&mut self) {
        for v in self.vars.iter_mut() {
            if v.kind == Kind::Artificial {
                v.hi = 0.0;
                if v.st != St::Basic {
                    v.place_nonbasic(false);
                }
            }
        }
    }

    fn solve_cold(&mut self, limit: usize) -> Result<LpSolution, LpError> {
        self.cold_start();
        self.phase1 = true;
        let out = self.primal(limit)?;
        if let Outcome::Limit = out {
            self.phase1 = false;
            return Ok(self.solution(LpStatus::IterationLimit, None));
        }
        if self.phase1_value() > FEAS_TOL {
            let ray = self.duals();
            self.phase1 = false;
            self.has_basis = false;
            return Ok(self.solution(LpStatus::Infeasible, Some(ray)));
        }
        self.phase1 = false;
        self.retire_artificials();
        self.finish_primal(limit)
    }

    fn finish_primal(&mut self, limit: usize) -> Result<LpSolution, LpError> {
        match self.primal(limit)? {
            Outcome::Optimal => Ok(self.solution(LpStatus::Optimal, None)),
            Outcome::Unbounded => Ok(self.solution(LpStatus::Unbounded, None)),
            Outcome::Limit => Ok(self.solution(LpStatus::IterationLimit, None)),
        }
    }

    pub fn solve(&mut self, iteration_limit: usize) -> Result<LpSolution, LpError> {
        self.iterations = 0;
        let first = self.solve_inner(iteration_limit);
        let sol = match first {
            Ok(s) => s,
            Err(LpError::Singular) => {
                self.has_basis = false;
                self.solve_inner(iteration_limit)?
            }
            Err(e) => return Err(e),
        };
        if sol.status == LpStatus::Optimal && !self.primal_feasible() {
            self.has_basis = false;
            return self.solve_inner(iteration_limit);
        }
        Ok(sol)
    }

    fn solve_inner(&mut self, limit: usize) -> Result<LpSolution, LpError> {
        if !self.has_basis || self.basis.len() != self.slacks.len() {
            return self.solve_cold(limit);
        }
        self.refactor()?;
        self.compute_xb();
        self.phase1 = false;
        if self.primal_feasible() {
            return self.finish_primal(limit);
        }
        match self.dual(limit)? {
            DualOutcome::Feasible => self.finish_primal(limit),
            DualOutcome::Limit => Ok(self.solution(LpStatus::IterationLimit, None)),
            DualOutcome::Infeasible | DualOutcome::NotDualFeasible => self.solve_cold(limit),
        }
    }

    fn solution(&self, status: LpStatus, ray: Option<Vec<f64>>) -> LpSolution {
        let primal: Vec<f64> = self.cols.iter().map(|&id| self.vars[id].x).collect();
        let objective = self.cols.iter().map(|&id| self.vars[id].cost * self.vars[id].x).sum();
        let y = if status == LpStatus::Optimal && self.has_basis {
            self.duals()
        } else {
            vec![0.0; self.slacks.len()]
        };
        let reduced_costs = if status == LpStatus::Optimal {
            self.cols.iter().map(|&id| self.reduced(id, &y)).collect()
        } else {
            vec![0.0; self.cols.len()]
        };
        LpSolution {
            status,
            primal,
            objective,
            duals: y,
            reduced_costs,
            farkas_ray: ray,
            iterations: self.iterations,
        }
    }

    /// Current slack activity of a row (row value `a.x`).
    pub fn row_activity(&self, row: usize) -> f64 {
        self.vars[self.slacks[row]].x
    }

    pub fn row_is_basic(&self, row: usize) -> bool {
        self.vars[self.slacks[row]].st == St::Basic
    }
}

pub fn solve_lp(p: &LpProblem, iteration_limit: usize) -> Result<LpSolution, LpError> {
    Simplex::new(p)?.solve(iteration_limit)
}

/// Margin by which `ray` proves infeasibility: `min over row boxes of y.s`
/// minus `max over the column box of (y^T A) x`. Positive means certified.
pub fn farkas_margin(p: &LpProblem, ray: &[f64]) -> f64 {
    let n = p.num_vars();
    let mut c = vec![0.0; n];
    let mut rhs_side = 0.0;
    for (i, r) in p.rows.iter().enumerate() {
        let y = ray[i];
        if y == 0.0 {
            continue;
        }
        for &(j, a) in &r.coeffs {
            c[j] += y * a;
        }
        let (lo, hi) = relation_bounds(r.relation, r.rhs);
        rhs_side += (y * lo).min(y * hi);
    }
    let mut lhs = 0.0;
    for j in 0..n {
        if c[j] == 0.0 {
            continue;
        }
        lhs += (c[j] * p.lower[j]).max(c[j] * p.upper[j]);
    }
    if lhs.is_nan() || rhs_side.is_nan() {
        return f64::NEG_INFINITY;
    }
    rhs_side - lhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(obj: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> LpProblem {
        LpProblem {
            objective: obj,
            rows: vec![],
            lower: lo,
            upper: hi,
        }
    }

    #[test]
    fn single_row() {
        let mut p = lp(vec![1.0], vec![0.0], vec![10.0]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 3.0);
        let s = solve_lp(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 3.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_certified() {
        let mut p = lp(vec![0.0], vec![0.0], vec![10.0]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 2.0);
        p.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let ray = s.farkas_ray.unwrap();
        assert!(ray[0] > 0.0 && ray[1] < 0.0);
        assert!(farkas_margin(&p, &ray) > 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = lp(vec![-1.0], vec![0.0], vec![f64::INFINITY]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&p, 100).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_limit_reported() {
        let mut p = lp(vec![-1.0, -1.0], vec![0.0; 2], vec![f64::INFINITY; 2]);
        p.add_row(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0);
        p.add_row(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0);
        assert_eq!(solve_lp(&p, 0).unwrap().status, LpStatus::IterationLimit);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's example: cycles under naive largest-coefficient pivoting.
        let mut p = lp(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
        );
        p.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        p.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        p.add_row(vec![(2, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, 10_000).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn warm_start_after_row_and_column() {
        let mut p = lp(vec![1.0, 1.0], vec![0.0; 2], vec![10.0; 2]);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0);
        let mut s = Simplex::new(&p).unwrap();
        let a = s.solve(100).unwrap();
        assert!((a.objective - 2.0).abs() < 1e-9);
        s.add_row(&[(0, 1.0)], Relation::Ge, 1.5);
        s.add_row(&[(1, 1.0)], Relation::Ge, 1.0);
        let b = s.solve(100).unwrap();
        assert_eq!(b.status, LpStatus::Optimal);
        assert!((b.objective - 2.5).abs() < 1e-9);
        let c = s.add_column(0.1, 0.0, 5.0, &[(0, 1.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(c, 2);
        let d = s.solve(100).unwrap();
        assert!((d.objective - 0.2).abs() < 1e-9, "{}", d.objective);
        s.set_row_bounds(1, f64::NEG_INFINITY, f64::INFINITY);
        s.set_row_bounds(2, f64::NEG_INFINITY, f64::INFINITY);
        let e = s.solve(100).unwrap();
        assert!((e.objective - 0.2).abs() < 1e-9);
    }

    #[test]
    fn remove_slack_row() {
        let mut p = lp(vec![1.0], vec![0.0], vec![10.0]);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 3.0);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 1.0);
        let mut s = Simplex::new(&p).unwrap();
        s.solve(100).unwrap();
        assert!(s.row_is_basic(1));
        s.remove_rows(&[1]);
        assert_eq!(s.num_rows(), 1);
        let r = s.solve(100).unwrap();
        assert!((r.objective - 3.0).abs() < 1e-9);
        s.remove_rows(&[0]);
        assert!((s.solve(100).unwrap().objective).abs() < 1e-9);
    }
}
