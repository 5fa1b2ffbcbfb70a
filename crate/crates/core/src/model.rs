//! Instance and schedule types, degradation/limit function evaluation, big-M,
//! and the full-schedule validator.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
/// Absolute tolerance on continuous constraints.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("function has no terms")]
    EmptyTerms,
    #[error("{kind:?} term on {slot:?} expects {expected} coefficient(s), got {got}")]
    CoefficientCount {
        kind: FuncKind,
        slot: Slot,
        expected: &'static str,
        got: usize,
    },
    #[error("non-finite coefficient or constant")]
    NonFinite,
    #[error("peer slot {0} out of range")]
    PeerOutOfRange(usize),
    #[error("limit function may only depend on the condition slot")]
    LimitSlot,
    #[error("function is not monotone/concave on its domain: {0}")]
    Shape(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuncKind {
    Linear,
    Polynomial,
    Exponential,
}

/// Input slot of a degradation or limit function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// The component's own condition in the previous period (for a limit
    /// function: the current condition).
    Prev,
    Production,
    /// Previous-period condition of component `k` of the same machine.
    Peer(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub slot: Slot,
    pub coeffs: Vec<f64>,
}

/// Separable function `constant + sum of per-slot terms`.
///
/// Term forms by kind:
/// * linear: `c * u`
/// * polynomial: `c1*u + c2*u^2 + c3*u^3` (one to three coefficients)
/// * exponential `[a, c]`: `a * (1 - 2^(-c*u))` on condition slots and
///   `-a * (2^(c*u) - 1)` on the production slot
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncSpec {
    pub kind: FuncKind,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub constant: f64,
}

/// Position of a slot in the flat argument vector `[prev, production, peer_0, ..]`.
pub fn slot_index(slot: Slot) -> usize {
    match slot {
        Slot::Prev => 0,
        Slot::Production => 1,
        Slot::Peer(k) => 2 + k,
    }
}

fn term_value(kind: FuncKind, slot: Slot, c: &[f64], u: f64) -> f64 {
    match kind {
        FuncKind::Linear => c[0] * u,
        FuncKind::Polynomial => {
            let mut acc = 0.0;
            let mut p = u;
            for &ci in c {
                acc += ci * p;
                p *= u;
            }
            acc
        }
        FuncKind::Exponential => {
            let (a, k) = (c[0], c[1]);
            if slot == Slot::Production {
                -a * ((k * u).exp2() - 1.0)
            } else {
                a * (1.0 - (-k * u).exp2())
            }
        }
    }
}

fn term_derivative(kind: FuncKind, slot: Slot, c: &[f64], u: f64) -> f64 {
    match kind {
        FuncKind::Linear => c[0],
        FuncKind::Polynomial => {
            let mut acc = 0.0;
            let mut p = 1.0;
            for (i, &ci) in c.iter().enumerate() {
                acc += (i + 1) as f64 * ci * p;
                p *= u;
            }
            acc
        }
        FuncKind::Exponential => {
            let (a, k) = (c[0], c[1]);
            let ln2 = std::f64::consts::LN_2;
            if slot == Slot::Production {
                -a * k * ln2 * (k * u).exp2()
            } else {
                a * k * ln2 * (-k * u).exp2()
            }
        }
    }
}

fn term_second_derivative(kind: FuncKind, slot: Slot, c: &[f64], u: f64) -> f64 {
    match kind {
        FuncKind::Linear => 0.0,
        FuncKind::Polynomial => {
            let mut acc = 0.0;
            let mut p = 1.0;
            for (i, &ci) in c.iter().enumerate().skip(1) {
                acc += ((i + 1) * i) as f64 * ci * p;
                p *= u;
            }
            acc
        }
        FuncKind::Exponential => {
            let (a, k) = (c[0], c[1]);
            let ln2sq = std::f64::consts::LN_2.powi(2);
            if slot == Slot::Production {
                -a * k * k * ln2sq * (k * u).exp2()
            } else {
                -a * k * k * ln2sq * (-k * u).exp2()
            }
        }
    }
}

impl FuncSpec {
    pub fn linear(constant: f64, terms: &[(Slot, f64)]) -> Self {
        FuncSpec {
            kind: FuncKind::Linear,
            terms: terms
                .iter()
                .map(|&(slot, c)| Term { slot, coeffs: vec![c] })
                .collect(),
            constant,
        }
    }

    /// Number of flat arguments needed to evaluate this function.
    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .map(|t| slot_index(t.slot) + 1)
            .max()
            .unwrap_or(0)
            .max(2)
    }

    /// Structural checks: nonempty, coefficient counts, finiteness.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        if self.terms.is_empty() {
            return Err(ModelError::EmptyTerms);
        }
        if !self.constant.is_finite() {
            return Err(ModelError::NonFinite);
        }
        for t in &self.terms {
            let n = t.coeffs.len();
            let (ok, expected) = match self.kind {
                FuncKind::Linear => (n == 1, "1"),
                FuncKind::Polynomial => ((1..=3).contains(&n), "1 to 3"),
                FuncKind::Exponential => (n == 2, "2"),
            };
            if !ok {
                return Err(ModelError::CoefficientCount {
                    kind: self.kind,
                    slot: t.slot,
                    expected,
                    got: n,
                });
            }
            if t.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(ModelError::NonFinite);
            }
        }
        Ok(())
    }

    /// Checks monotonicity (nondecreasing in condition slots, nonincreasing in
    /// production) and concavity of every term over `[0, upper]`.
    pub fn check_domain(&self, upper: &[f64]) -> Result<(), ModelError> {
        self.check_shape()?;
        for t in &self.terms {
            let idx = slot_index(t.slot);
            let hi = *upper.get(idx).ok_or(match t.slot {
                Slot::Peer(k) => ModelError::PeerOutOfRange(k),
                _ => ModelError::Dimension("box too short".into()),
            })?;
            let increasing = t.slot != Slot::Production;
            let bad = |what: &str| {
                Err(ModelError::Shape(format!(
                    "{:?} term on {:?} {}",
                    self.kind, t.slot, what
                )))
            };
            match self.kind {
                FuncKind::Exponential => {
                    if t.coeffs[0] < 0.0 || t.coeffs[1] < 0.0 {
                        return bad("needs nonnegative coefficients");
                    }
                }
                _ => {
                    // Second derivative is affine in u; first derivative is at
                    // most quadratic, so endpoints plus the stationary point
                    // of the first derivative suffice.
                    let mut pts = vec![0.0, hi];
                    if t.coeffs.len() == 3 && t.coeffs[2] != 0.0 {
                        let v = -t.coeffs[1] / (3.0 * t.coeffs[2]);
                        if v > 0.0 && v < hi {
                            pts.push(v);
                        }
                    }
                    for &u in &pts {
                        let d1 = term_derivative(self.kind, t.slot, &t.coeffs, u);
                        let d2 = term_second_derivative(self.kind, t.slot, &t.coeffs, u);
                        if (increasing && d1 < -1e-12) || (!increasing && d1 > 1e-12) {
                            return bad("has the wrong monotonicity");
                        }
                        if d2 > 1e-12 {
                            return bad("is not concave");
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates at a flat argument vector, clamping each input below at 0.
    pub fn eval_flat(&self, u: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let x = u.get(slot_index(t.slot)).copied().unwrap_or(0.0).max(0.0);
            v += term_value(self.kind, t.slot, &t.coeffs, x);
        }
        v
    }

    /// Evaluates with every input clamped into `[0, upper]`.
    pub fn eval_in(&self, u: &[f64], upper: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let i = slot_index(t.slot);
            let x = clamp_arg(u, upper, i);
            v += term_value(self.kind, t.slot, &t.coeffs, x);
        }
        v
    }

    /// Analytic gradient at the clamped point, written into `out` (flat layout).
    pub fn grad_in(&self, u: &[f64], upper: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for t in &self.terms {
            let i = slot_index(t.slot);
            let x = clamp_arg(u, upper, i);
            out[i] += term_derivative(self.kind, t.slot, &t.coeffs, x);
        }
    }

    pub fn eval(&self, prev: f64, production: f64, peers: &[f64]) -> f64 {
        self.eval_flat(&flat_point(prev, production, peers))
    }
}

fn clamp_arg(u: &[f64], upper: &[f64], i: usize) -> f64 {
    let x = u.get(i).copied().unwrap_or(0.0);
    let hi = upper.get(i).copied().unwrap_or(f64::INFINITY);
    x.max(0.0).min(hi)
}

pub fn flat_point(prev: f64, production: f64, peers: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 + peers.len());
    v.push(prev);
    v.push(production);
    v.extend_from_slice(peers);
    v
}

/// Evaluates `f` after structural validation. Negative inputs are clamped to 0.
pub fn eval_func(
    f: &FuncSpec,
    prev_condition: f64,
    production: f64,
    peer_conditions: &[f64],
) -> Result<f64, ModelError> {
    f.check_shape()?;
    for t in &f.terms {
        if let Slot::Peer(k) = t.slot {
            if k >= peer_conditions.len() {
                return Err(ModelError::PeerOutOfRange(k));
            }
        }
    }
    Ok(f.eval(prev_condition, production, peer_conditions))
}

/// Gradient in the flat layout `[prev, production, peer_0, ..]`.
pub fn grad_func(
    f: &FuncSpec,
    prev_condition: f64,
    production: f64,
    peer_conditions: &[f64],
) -> Result<Vec<f64>, ModelError> {
    eval_func(f, prev_condition, production, peer_conditions)?;
    let u = flat_point(prev_condition, production, peer_conditions);
    let mut g = vec![0.0; u.len()];
    f.grad_in(&u, &[], &mut g);
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub cost: f64,
    pub duration: usize,
    pub max_condition: f64,
    pub max_production: f64,
    /// Degradation function.
    pub f: FuncSpec,
    /// Production-limit function of the current condition.
    pub g: FuncSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineGroupSpec {
    pub multiplicity: usize,
    pub components: Vec<ComponentSpec>,
    /// `(k, k2)`: maintaining `k` requires maintaining `k2` in the same period.
    #[serde(default)]
    pub implications: Vec<[usize; 2]>,
}

impl MachineGroupSpec {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Production bound of a machine in perfect condition.
    pub fn q_min(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_production)
            .fold(f64::INFINITY, f64::min)
    }

    /// Upper corner of the domain of component `k`'s functions (flat layout).
    pub fn func_box(&self, k: usize) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 + self.components.len());
        b.push(self.components[k].max_condition);
        b.push(self.components[k].max_production);
        b.extend(self.components.iter().map(|c| c.max_condition));
        b
    }

    /// Degradation bound for component `k` given the previous conditions of
    /// all components and the current production.
    pub fn degrade(&self, k: usize, prev: &[f64], production: f64) -> f64 {
        let u = flat_point(prev[k], production, prev);
        self.components[k].f.eval_in(&u, &self.func_box(k))
    }

    /// Production limit imposed by component `k` at condition `r`.
    pub fn limit(&self, k: usize, r: f64) -> f64 {
        let u = [r, 0.0];
        let c = &self.components[k];
        c.g.eval_in(&u, &[c.max_condition, c.max_production])
    }

    pub fn big_m(&self, k: usize) -> f64 {
        big_m(&self.components[k], self.components.len())
    }

    /// Largest condition trajectory compatible with maintenance `x` and
    /// production `y` (conditions follow the degradation bound, reset to the
    /// maximum while maintained). Entries may be negative when a component fails.
    pub fn condition_trajectory(&self, x: &[Vec<u8>], y: &[f64]) -> Vec<Vec<f64>> {
        let kk = self.components.len();
        let tt = y.len();
        let mut r = vec![vec![0.0; tt]; kk];
        let mut prev: Vec<f64> = self.components.iter().map(|c| c.max_condition).collect();
        for t in 0..tt {
            let mut cur = vec![0.0; kk];
            for k in 0..kk {
                let rk = self.components[k].max_condition;
                cur[k] = if x[k][t] != 0 {
                    rk
                } else {
                    self.degrade(k, &prev, y[t]).min(rk)
                };
                r[k][t] = cur[k];
            }
            prev = cur;
        }
        r
    }

    fn validate(&self, periods: usize) -> Result<(), ModelError> {
        let bad = |s: String| Err(ModelError::Instance(s));
        if self.multiplicity == 0 {
            return bad("multiplicity must be at least 1".into());
        }
        if self.components.is_empty() {
            return bad("machine group without components".into());
        }
        let kk = self.components.len();
        for (k, c) in self.components.iter().enumerate() {
            if !(c.cost > 0.0 && c.cost.is_finite()) {
                return bad(format!("component {k}: cost must be positive"));
            }
            if c.duration == 0 {
                return bad(format!("component {k}: duration must be positive"));
            }
            if !(c.max_condition > 0.0 && c.max_condition.is_finite()) {
                return bad(format!("component {k}: max_condition must be positive"));
            }
            if !(c.max_production > 0.0 && c.max_production.is_finite()) {
                return bad(format!("component {k}: max_production must be positive"));
            }
            let bx = self.func_box(k);
            c.f.check_domain(&bx)?;
            for t in &c.f.terms {
                if let Slot::Peer(j) = t.slot {
                    if j >= kk {
                        return Err(ModelError::PeerOutOfRange(j));
                    }
                }
            }
            if c.g.terms.iter().any(|t| t.slot != Slot::Prev) {
                return Err(ModelError::LimitSlot);
            }
            c.g.check_domain(&bx)?;
            if c.g.eval_flat(&[0.0, 0.0]) < -FEAS_TOL {
                return bad(format!("component {k}: limit function negative at zero"));
            }
            let full: Vec<f64> = self.components.iter().map(|c| c.max_condition).collect();
            if self.degrade(k, &full, 0.0) > c.max_condition + 1e-9 {
                return bad(format!(
                    "component {k}: idle degradation exceeds the maximum condition"
                ));
            }
        }
        for &[a, b] in &self.implications {
            if a >= kk || b >= kk {
                return bad(format!("implication ({a},{b}) out of range"));
            }
            if a == b {
                return bad(format!("self implication ({a},{a})"));
            }
        }
        let _ = periods;
        Ok(())
    }
}

/// Big-M for the degradation row of a component: `R - min(0, f(0, Q; 0, ..))`.
pub fn big_m(component: &ComponentSpec, num_components: usize) -> f64 {
    let peers = vec![0.0; num_components.max(component.f.arity().saturating_sub(2))];
    let worst = component.f.eval(0.0, component.max_production, &peers);
    component.max_condition - worst.min(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub periods: usize,
    pub demand: Vec<f64>,
    pub groups: Vec<MachineGroupSpec>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl Instance {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::Instance(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.periods == 0 {
            return Err(ModelError::Instance("periods must be positive".into()));
        }
        if self.demand.len() != self.periods {
            return Err(ModelError::Instance(format!(
                "demand has {} entries for {} periods",
                self.demand.len(),
                self.periods
            )));
        }
        if self.demand.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(ModelError::Instance("demand must be finite and >= 0".into()));
        }
        if self.groups.is_empty() {
            return Err(ModelError::Instance("no machine groups".into()));
        }
        for g in &self.groups {
            g.validate(self.periods)?;
        }
        Ok(())
    }

    pub fn num_machines(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    /// Group index of every machine, groups laid out contiguously.
    pub fn machine_groups(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(z, g)| std::iter::repeat_n(z, g.multiplicity))
            .collect()
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let inst: Instance = serde_json::from_str(s).map_err(|e| ModelError::Json(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSchedule {
    pub group: usize,
    /// Maintenance indicators `[component][period]`.
    pub x: Vec<Vec<u8>>,
    pub y: Vec<f64>,
    /// Conditions `[component][period]`.
    pub r: Vec<Vec<f64>>,
}

impl MachineSchedule {
    pub fn idle(group: &MachineGroupSpec, group_id: usize, periods: usize) -> Self {
        let x = vec![vec![0u8; periods]; group.num_components()];
        let y = vec![0.0; periods];
        let r = group.condition_trajectory(&x, &y);
        MachineSchedule { group: group_id, x, y, r }
    }

    pub fn cost(&self, group: &MachineGroupSpec) -> f64 {
        self.x
            .iter()
            .zip(&group.components)
            .map(|(row, c)| c.cost * row.iter().map(|&v| v as f64).sum::<f64>())
            .sum()
    }

    pub fn maintenance_actions(&self) -> usize {
        self.x
            .iter()
            .map(|row| {
                (0..row.len())
                    .filter(|&t| row[t] != 0 && (t == 0 || row[t - 1] == 0))
                    .count()
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub machines: Vec<MachineSchedule>,
}

impl Schedule {
    pub fn new(machines: Vec<MachineSchedule>) -> Self {
        Schedule {
            format_version: FORMAT_VERSION,
            machines,
        }
    }

    pub fn cost(&self, instance: &Instance) -> f64 {
        self.machines
            .iter()
            .map(|m| m.cost(&instance.groups[m.group]))
            .sum()
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Demand,
    ProductionLimit,
    Duration,
    Implication,
    Downtime,
    Degradation,
    Bounds,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub machine: Option<usize>,
    pub component: Option<usize>,
    /// Zero-based period.
    pub period: Option<usize>,
    /// Amount by which the constraint is violated (positive).
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.family)?;
        if let Some(n) = self.machine {
            write!(f, " machine={n}")?;
        }
        if let Some(k) = self.component {
            write!(f, " component={k}")?;
        }
        if let Some(t) = self.period {
            write!(f, " period={}", t + 1)?;
        }
        write!(f, " residual={:.3e}", self.residual)
    }
}

/// Checks a schedule against every constraint of the compact model.
/// Returns an empty list iff the schedule is feasible.
pub fn validate_schedule(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Vec<Violation>, ModelError> {
    let tt = instance.periods;
    let dim = |s: String| Err(ModelError::Dimension(s));
    let mut per_group = vec![0usize; instance.groups.len()];
    for (n, m) in schedule.machines.iter().enumerate() {
        let Some(g) = instance.groups.get(m.group) else {
            return dim(format!("machine {n} refers to unknown group {}", m.group));
        };
        per_group[m.group] += 1;
        let kk = g.num_components();
        if m.x.len() != kk || m.r.len() != kk || m.y.len() != tt {
            return dim(format!("machine {n} has wrong component/period counts"));
        }
        if m.x.iter().chain(std::iter::empty()).any(|row| row.len() != tt)
            || m.r.iter().any(|row| row.len() != tt)
        {
            return dim(format!("machine {n} has rows of wrong length"));
        }
    }
    for (z, g) in instance.groups.iter().enumerate() {
        if per_group[z] != g.multiplicity {
            return dim(format!(
                "group {z} has {} machines, expected {}",
                per_group[z], g.multiplicity
            ));
        }
    }

    let mut out = Vec::new();
    let mut push = |family, machine, component, period, residual: f64| {
        out.push(Violation {
            family,
            machine,
            component,
            period,
            residual,
        })
    };
    use ConstraintFamily::*;

    for t in 0..tt {
        let total: f64 = schedule.machines.iter().map(|m| m.y[t]).sum();
        if instance.demand[t] - total > FEAS_TOL {
            push(Demand, None, None, Some(t), instance.demand[t] - total);
        }
    }

    for (n, m) in schedule.machines.iter().enumerate() {
        let g = &instance.groups[m.group];
        let kk = g.num_components();
        let qmin = g.q_min();
        for k in 0..kk {
            for t in 0..tt {
                if m.x[k][t] > 1 {
                    push(Binary, Some(n), Some(k), Some(t), m.x[k][t] as f64 - 1.0);
                }
            }
        }
        for t in 0..tt {
            let y = m.y[t];
            if y < -FEAS_TOL {
                push(Bounds, Some(n), None, Some(t), -y);
            }
            if y > qmin + FEAS_TOL {
                push(Bounds, Some(n), None, Some(t), y - qmin);
            }
            for k in 0..kk {
                let c = &g.components[k];
                let r = m.r[k][t];
                if r < -FEAS_TOL {
                    push(Bounds, Some(n), Some(k), Some(t), -r);
                }
                if r > c.max_condition + FEAS_TOL {
                    push(Bounds, Some(n), Some(k), Some(t), r - c.max_condition);
                }
                let lim = g.limit(k, r);
                if y - lim > FEAS_TOL {
                    push(ProductionLimit, Some(n), Some(k), Some(t), y - lim);
                }
                let x = m.x[k][t] as f64;
                let down = (1.0 - x) * c.max_production;
                if y - down > FEAS_TOL {
                    push(Downtime, Some(n), Some(k), Some(t), y - down);
                }
                let prev: Vec<f64> = if t == 0 {
                    g.components.iter().map(|c| c.max_condition).collect()
                } else {
                    (0..kk).map(|j| m.r[j][t - 1]).collect()
                };
                let rhs = g.degrade(k, &prev, y) + g.big_m(k) * x;
                if r - rhs > FEAS_TOL {
                    push(Degradation, Some(n), Some(k), Some(t), r - rhs);
                }
                let start = x - if t == 0 { 0.0 } else { m.x[k][t - 1] as f64 };
                for i in (t + 1)..=(t + c.duration).min(tt - 1) {
                    if start - m.x[k][i] as f64 > 0.5 {
                        push(Duration, Some(n), Some(k), Some(i), 1.0);
                    }
                }
            }
            for &[a, b] in &g.implications {
                if m.x[a][t] > m.x[b][t] {
                    push(Implication, Some(n), Some(a), Some(t), 1.0);
                }
            }
        }
    }
    Ok(out)
}
