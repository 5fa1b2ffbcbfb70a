//! Random instance generator, the just-in-time maintenance heuristic and a
//! fixed instance on which that heuristic is suboptimal.

use crate::model::{
    validate_schedule, ComponentSpec, FuncKind, FuncSpec, Instance, MachineGroupSpec,
    MachineSchedule, Schedule, Slot, Term, FEAS_TOL, FORMAT_VERSION,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Upper end of the raw coefficient distribution.
pub const RAW_COEFF_MAX: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Layout {
    OneGroup20,
    TwoGroups10,
    /// Multiplicity of each group.
    Custom(Vec<usize>),
}

impl Layout {
    pub fn multiplicities(&self) -> Vec<usize> {
        match self {
            Layout::OneGroup20 => vec![20],
            Layout::TwoGroups10 => vec![10, 10],
            Layout::Custom(v) => v.clone(),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::OneGroup20 => write!(f, "one-group-20"),
            Layout::TwoGroups10 => write!(f, "two-groups-10"),
            Layout::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|m| m.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one-group-20" => Ok(Layout::OneGroup20),
            "two-groups-10" => Ok(Layout::TwoGroups10),
            _ => {
                let list = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| format!("unknown layout '{s}'"))?;
                let v = list
                    .split(',')
                    .map(|p| p.trim().parse::<usize>().map_err(|e| format!("layout '{s}': {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() || v.contains(&0) {
                    return Err(format!("layout '{s}': multiplicities must be >= 1"));
                }
                Ok(Layout::Custom(v))
            }
        }
    }
}

impl TryFrom<String> for Layout {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Layout> for String {
    fn from(l: Layout) -> String {
        l.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Complexity {
    Low,
    High,
}

impl Complexity {
    pub fn component_range(self) -> (usize, usize) {
        match self {
            Complexity::Low => (1, 3),
            Complexity::High => (3, 7),
        }
    }

    pub fn implication_probability(self) -> f64 {
        match self {
            Complexity::Low => 0.10,
            Complexity::High => 0.15,
        }
    }
}

impl FromStr for Complexity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Complexity::Low),
            "high" => Ok(Complexity::High),
            _ => Err(format!("unknown complexity '{s}'")),
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Complexity::Low => "low",
            Complexity::High => "high",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub periods: usize,
    pub layout: Layout,
    pub complexity: Complexity,
    /// Demand load relative to aggregate capacity.
    pub rho: f64,
    /// Overrides the complexity's component-count range.
    #[serde(default)]
    pub components: Option<(usize, usize)>,
    /// Multiplier on wear per period; larger values force maintenance on
    /// short horizons.
    #[serde(default = "one")]
    pub wear: f64,
}

fn one() -> f64 {
    1.0
}

impl GenConfig {
    pub fn new(seed: u64, periods: usize, layout: Layout, complexity: Complexity) -> Self {
        GenConfig {
            seed,
            periods,
            layout,
            complexity,
            rho: 0.5,
            components: None,
            wear: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.periods == 0 {
            return Err("periods must be positive".into());
        }
        let m = self.layout.multiplicities();
        if m.is_empty() || m.contains(&0) {
            return Err("layout multiplicities must be >= 1".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.2) {
            return Err(format!("rho {} outside (0, 1.2]", self.rho));
        }
        if !(self.wear > 0.0 && self.wear.is_finite()) {
            return Err(format!("wear {} must be positive", self.wear));
        }
        if let Some((lo, hi)) = self.components {
            if lo == 0 || lo > hi {
                return Err(format!("component range ({lo}, {hi}) invalid"));
            }
        }
        Ok(())
    }
}

/// A function draw before unit scaling: its kind and raw coefficients, each
/// uniform on `[0, RAW_COEFF_MAX]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFunc {
    pub kind: FuncKind,
    pub coeffs: Vec<f64>,
}

pub fn sample_kind(rng: &mut impl Rng) -> FuncKind {
    match rng.gen_range(0..3) {
        0 => FuncKind::Linear,
        1 => FuncKind::Polynomial,
        _ => FuncKind::Exponential,
    }
}

/// Draws a kind and `count(kind)` raw coefficients.
pub fn sample_raw(rng: &mut impl Rng, count: impl Fn(FuncKind) -> usize) -> RawFunc {
    let kind = sample_kind(rng);
    let coeffs = (0..count(kind))
        .map(|_| rng.gen_range(0.0..=RAW_COEFF_MAX))
        .collect();
    RawFunc { kind, coeffs }
}

/// Steepness parameter of exponential terms, kept away from zero.
fn steep(c: f64) -> f64 {
    c.max(0.1)
}

fn degradation_count(kind: FuncKind, peers: usize) -> usize {
    // decay, production, prev, peers
    match kind {
        FuncKind::Linear => 1 + 1 + peers,
        FuncKind::Polynomial => 1 + 3 + peers,
        FuncKind::Exponential => 1 + 2 + 1 + 2 * peers,
    }
}

fn limit_count(kind: FuncKind) -> usize {
    match kind {
        FuncKind::Linear => 2,
        FuncKind::Polynomial => 5,
        FuncKind::Exponential => 3,
    }
}

/// Degradation function of a component with condition bound `r`, production
/// bound `q`, and peer components `(index, condition bound)`. Full production
/// wears on average a quarter of the condition range per period.
pub fn build_degradation(raw: &RawFunc, r: f64, q: f64, peers: &[(usize, f64)], wear: f64) -> FuncSpec {
    let c = &raw.coeffs;
    let decay = wear * c[0] / 30.0;
    let mut terms = Vec::new();
    let mut constant = -decay * r;
    let mut i = 1;
    match raw.kind {
        FuncKind::Linear => {
            terms.push(Term { slot: Slot::Prev, coeffs: vec![1.0] });
            terms.push(Term { slot: Slot::Production, coeffs: vec![-wear * r * c[1] / 6.0 / q] });
            i += 1;
        }
        FuncKind::Polynomial => {
            terms.push(Term { slot: Slot::Prev, coeffs: vec![1.0] });
            terms.push(Term {
                slot: Slot::Production,
                coeffs: (0..3)
                    .map(|p| -wear * r * c[1 + p] / 18.0 / q.powi(p as i32 + 1))
                    .collect(),
            });
            i += 3;
        }
        FuncKind::Exponential => {
            let (a, s) = (wear * c[1] / 6.0, steep(c[2]));
            terms.push(Term {
                slot: Slot::Production,
                coeffs: vec![r * a / (s.exp2() - 1.0), s / q],
            });
            let sp = steep(c[3]);
            terms.push(Term {
                slot: Slot::Prev,
                coeffs: vec![r / (1.0 - (-sp).exp2()), sp / r],
            });
            i += 3;
        }
    }
    for &(j, rj) in peers {
        let beta = c[i] / 30.0;
        constant -= r * beta;
        let coeffs = match raw.kind {
            FuncKind::Linear => vec![r * beta / rj],
            FuncKind::Polynomial => vec![2.0 * r * beta / rj, -r * beta / (rj * rj)],
            FuncKind::Exponential => {
                let s = steep(c[i + 1]);
                i += 1;
                vec![r * beta / (1.0 - (-s).exp2()), s / rj]
            }
        };
        i += 1;
        terms.push(Term { slot: Slot::Peer(j), coeffs });
    }
    FuncSpec {
        kind: raw.kind,
        terms,
        constant,
    }
}

/// Production limit `q * (base + scale * h(r / rmax))` with `h` concave,
/// increasing, `h(0) = 0` and `h(1) = 1`.
pub fn build_limit(raw: &RawFunc, r: f64, q: f64) -> FuncSpec {
    let c = &raw.coeffs;
    let base = c[0] / 6.0;
    let scale = 0.5 + c[1] / 6.0;
    let coeffs = match raw.kind {
        FuncKind::Linear => vec![q * scale / r],
        FuncKind::Polynomial => {
            let (a, b, d) = (c[2], c[3], c[4]);
            let s = a + b + d;
            let (u1, u2, u3) = if s <= 1e-12 {
                (1.0, 0.0, 0.0)
            } else {
                ((a + 2.0 * b + 3.0 * d) / s, (-b - 3.0 * d) / s, d / s)
            };
            vec![q * scale * u1 / r, q * scale * u2 / (r * r), q * scale * u3 / (r * r * r)]
        }
        FuncKind::Exponential => {
            let s = steep(c[2]);
            vec![q * scale / (1.0 - (-s).exp2()), s / r]
        }
    };
    FuncSpec {
        kind: raw.kind,
        terms: vec![Term { slot: Slot::Prev, coeffs }],
        constant: q * base,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn gen_group(rng: &mut ChaCha8Rng, multiplicity: usize, range: (usize, usize), p_imp: f64, wear: f64) -> MachineGroupSpec {
    let kk = rng.gen_range(range.0..=range.1);
    let mut implications = Vec::new();
    for a in 0..kk {
        for b in (a + 1)..kk {
            if rng.gen_bool(p_imp) {
                implications.push(if rng.gen_bool(0.5) { [a, b] } else { [b, a] });
            }
        }
    }
    let basics: Vec<(f64, usize, f64, f64)> = (0..kk)
        .map(|_| {
            let cost = rng.gen_range(1..=10) as f64;
            let duration = rng.gen_range(1..=2);
            let q = round2(rng.gen_range(5.0..=20.0));
            let r = round2(rng.gen_range(5.0..=15.0));
            (cost, duration, q, r)
        })
        .collect();
    let components = (0..kk)
        .map(|k| {
            let (cost, duration, q, r) = basics[k];
            // A component's wear depends on the components it requires.
            let peers: Vec<(usize, f64)> = implications
                .iter()
                .filter(|p| p[0] == k)
                .map(|p| (p[1], basics[p[1]].3))
                .collect();
            let fr = sample_raw(rng, |kind| degradation_count(kind, peers.len()));
            let gr = sample_raw(rng, limit_count);
            ComponentSpec {
                cost,
                duration,
                max_condition: r,
                max_production: q,
                f: build_degradation(&fr, r, q, &peers, wear),
                g: build_limit(&gr, r, q),
            }
        })
        .collect();
    MachineGroupSpec {
        multiplicity,
        components,
        implications,
    }
}

/// Deterministic in `config`.
pub fn generate(config: &GenConfig) -> Result<Instance, String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let range = config
        .components
        .unwrap_or_else(|| config.complexity.component_range());
    let p_imp = config.complexity.implication_probability();
    let groups: Vec<MachineGroupSpec> = config
        .layout
        .multiplicities()
        .into_iter()
        .map(|m| gen_group(&mut rng, m, range, p_imp, config.wear))
        .collect();
    let capacity: f64 = groups.iter().map(|g| g.multiplicity as f64 * g.q_min()).sum();
    let demand = (0..config.periods)
        .map(|_| round2(config.rho * capacity * rng.gen_range(0.6..=1.0)))
        .collect();
    let inst = Instance {
        format_version: FORMAT_VERSION,
        periods: config.periods,
        demand,
        groups,
    };
    inst.validate().map_err(|e| e.to_string())?;
    Ok(inst)
}

/// Single machine with components A (index 0) and B (index 1), where
/// maintaining B requires maintaining A. The just-in-time heuristic maintains
/// A, then B together with A; the optimum maintains both once.
pub fn make_jit_counterexample() -> Instance {
    let comp = |cost: f64, r: f64| ComponentSpec {
        cost,
        duration: 1,
        max_condition: r,
        max_production: 2.0,
        f: FuncSpec::linear(0.0, &[(Slot::Prev, 1.0), (Slot::Production, -1.0)]),
        g: FuncSpec::linear(10.0, &[(Slot::Prev, 0.0)]),
    };
    Instance {
        format_version: FORMAT_VERSION,
        periods: 8,
        demand: vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        groups: vec![MachineGroupSpec {
            multiplicity: 1,
            components: vec![comp(1.0, 2.0), comp(2.0, 3.0)],
            implications: vec![[1, 0]],
        }],
    }
}

struct Sim<'a> {
    group: &'a MachineGroupSpec,
    cond: Vec<f64>,
}

impl Sim<'_> {
    /// Conditions after one period, or the failing components.
    fn step(&self, y: f64, maintained: &[bool]) -> Result<Vec<f64>, Vec<usize>> {
        let g = self.group;
        let mut cur = vec![0.0; g.num_components()];
        let mut failing = Vec::new();
        for k in 0..cur.len() {
            let rk = g.components[k].max_condition;
            cur[k] = if maintained[k] {
                rk
            } else {
                g.degrade(k, &self.cond, y).min(rk)
            };
            if cur[k] < -FEAS_TOL || y > g.limit(k, cur[k].max(0.0)) + FEAS_TOL {
                failing.push(k);
            }
        }
        if y > g.q_min() + FEAS_TOL {
            failing.extend(0..cur.len());
            failing.dedup();
        }
        if failing.is_empty() {
            Ok(cur)
        } else {
            Err(failing)
        }
    }

    /// First period from `s` at which the plan fails without maintenance.
    fn first_failure(&self, plan: &[f64], s: usize) -> Option<(usize, Vec<usize>)> {
        let mut sim = Sim {
            group: self.group,
            cond: self.cond.clone(),
        };
        let none = vec![false; self.cond.len()];
        for (t, &y) in plan.iter().enumerate().skip(s) {
            match sim.step(y, &none) {
                Ok(c) => sim.cond = c,
                Err(f) => return Some((t, f)),
            }
        }
        None
    }
}

fn implication_closure(group: &MachineGroupSpec, seed: &[usize]) -> Vec<usize> {
    let mut set = vec![false; group.num_components()];
    let mut stack: Vec<usize> = seed.to_vec();
    while let Some(k) = stack.pop() {
        if set[k] {
            continue;
        }
        set[k] = true;
        for p in &group.implications {
            if p[0] == k {
                stack.push(p[1]);
            }
        }
    }
    (0..set.len()).filter(|&k| set[k]).collect()
}

/// Condition-based heuristic: production is split across machines in
/// proportion to capacity, and a component is maintained at the last start
/// period that still prevents its failure, finishes within the horizon, and
/// whose downtime window can be covered (zero planned production, or spare
/// capacity on other machines).
/// Returns `None` when that plan is infeasible.
pub fn jit_maintenance_heuristic(instance: &Instance) -> Option<Schedule> {
    instance.validate().ok()?;
    let tt = instance.periods;
    let mg = instance.machine_groups();
    let groups: Vec<&MachineGroupSpec> = mg.iter().map(|&z| &instance.groups[z]).collect();
    let cap: Vec<f64> = groups.iter().map(|g| g.q_min()).collect();
    let total: f64 = cap.iter().sum();
    let mut y: Vec<Vec<f64>> = cap
        .iter()
        .map(|c| instance.demand.iter().map(|e| e * c / total).collect())
        .collect();
    let mut x: Vec<Vec<Vec<u8>>> = groups
        .iter()
        .map(|g| vec![vec![0u8; tt]; g.num_components()])
        .collect();
    let mut sims: Vec<Sim> = groups
        .iter()
        .map(|g| Sim {
            group: g,
            cond: g.components.iter().map(|c| c.max_condition).collect(),
        })
        .collect();
    let down = |x: &[Vec<Vec<u8>>], n: usize, t: usize| x[n].iter().any(|row| row[t] != 0);
    let window = |g: &MachineGroupSpec, comps: &[usize], s: usize| {
        let d = comps.iter().map(|&k| g.components[k].duration).max().unwrap_or(0);
        s..=(s + d).min(tt - 1)
    };
    // A maintenance action may only start if it finishes within the horizon.
    let fits = |g: &MachineGroupSpec, comps: &[usize], s: usize| {
        comps.iter().all(|&k| s + g.components[k].duration < tt)
    };
    // Whether machine `n`'s planned production in the window can move elsewhere.
    let coverable = |y: &[Vec<f64>], x: &[Vec<Vec<u8>>], n: usize, w: std::ops::RangeInclusive<usize>| {
        w.into_iter().all(|t| {
            let slack: f64 = (0..y.len())
                .filter(|&m| m != n && !down(x, m, t))
                .map(|m| (cap[m] - y[m][t]).max(0.0))
                .sum();
            y[n][t] <= slack + FEAS_TOL
        })
    };

    for s in 0..tt {
        for n in 0..mg.len() {
            if down(&x, n, s) {
                continue;
            }
            let Some((fail, comps)) = sims[n].first_failure(&y[n], s) else {
                continue;
            };
            let comps = implication_closure(groups[n], &comps);
            let later = ((s + 1)..=fail).any(|s2| {
                fits(groups[n], &comps, s2) && coverable(&y, &x, n, window(groups[n], &comps, s2))
            });
            if later {
                continue;
            }
            if !fits(groups[n], &comps, s) || !coverable(&y, &x, n, window(groups[n], &comps, s)) {
                return None;
            }
            for t in window(groups[n], &comps, s) {
                let mut need = y[n][t];
                y[n][t] = 0.0;
                for m in 0..mg.len() {
                    if m == n || down(&x, m, t) || need <= 0.0 {
                        continue;
                    }
                    let add = (cap[m] - y[m][t]).max(0.0).min(need);
                    y[m][t] += add;
                    need -= add;
                }
            }
            for &k in &comps {
                let d = groups[n].components[k].duration;
                for t in s..=(s + d).min(tt - 1) {
                    x[n][k][t] = 1;
                }
            }
        }
        for n in 0..mg.len() {
            let maintained: Vec<bool> = x[n].iter().map(|row| row[s] != 0).collect();
            let yv = if down(&x, n, s) { 0.0 } else { y[n][s] };
            sims[n].cond = match sims[n].step(yv, &maintained) {
                Ok(c) => c,
                Err(_) => return None,
            };
        }
    }

    let machines: Vec<MachineSchedule> = (0..mg.len())
        .map(|n| {
            let r = groups[n]
                .condition_trajectory(&x[n], &y[n])
                .into_iter()
                .map(|row| row.into_iter().map(|v| v.max(0.0)).collect())
                .collect();
            MachineSchedule {
                group: mg[n],
                x: x[n].clone(),
                y: y[n].clone(),
                r,
            }
        })
        .collect();
    let sched = Schedule::new(machines);
    match validate_schedule(instance, &sched) {
        Ok(v) if v.is_empty() => Some(sched),
        _ => None,
    }
}
