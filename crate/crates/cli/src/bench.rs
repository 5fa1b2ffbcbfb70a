//! Benchmark classification, aggregation and output tables.

use pmsched::report::{SolveReport, SolveStatus, TimeBreakdown};
use serde::Serialize;
use std::fmt::Write as _;

/// Bumped whenever the CSV columns change.
pub const CSV_VERSION: u32 = 1;

/// Instances solved by both methods faster than this are dropped.
pub const EXCLUDE_BELOW_SECS: f64 = 5.0;
/// Proven by at least one method faster than this: easy.
pub const EASY_BELOW_SECS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Easy,
    Medium,
    Hard,
    /// Both methods proved the outcome quickly.
    ExcludedFast,
    /// Neither method proved anything nor found an incumbent.
    ExcludedNoIncumbent,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Easy => "easy",
            Class::Medium => "medium",
            Class::Hard => "hard",
            Class::ExcludedFast => "excluded-fast",
            Class::ExcludedNoIncumbent => "excluded-no-incumbent",
        }
    }
}

fn proven(r: &SolveReport) -> bool {
    r.status != SolveStatus::Limit
}

pub fn classify(compact: &SolveReport, dw: &SolveReport) -> Class {
    let runs = [compact, dw];
    if runs.iter().all(|r| proven(r) && r.wall_time < EXCLUDE_BELOW_SECS) {
        Class::ExcludedFast
    } else if runs.iter().any(|r| proven(r) && r.wall_time < EASY_BELOW_SECS) {
        Class::Easy
    } else if runs.iter().any(|r| proven(r)) {
        Class::Medium
    } else if runs.iter().any(|r| r.primal_bound.is_some()) {
        Class::Hard
    } else {
        Class::ExcludedNoIncumbent
    }
}

/// Whether either run established that the instance has a solution.
pub fn feasible(compact: &SolveReport, dw: &SolveReport) -> bool {
    [compact, dw].iter().any(|r| r.primal_bound.is_some())
}

/// One CSV row; field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub csv_version: u32,
    pub instance: String,
    pub method: String,
    pub class: String,
    pub status: String,
    pub feasible: bool,
    pub time_s: f64,
    pub gap_pct: Option<f64>,
    pub nodes: usize,
    pub pricing_rounds: usize,
    pub exact_pricing: f64,
    pub integer_rmp: f64,
    pub branching: f64,
    pub rmp_resolve: f64,
    pub other: f64,
}

impl BenchRecord {
    pub fn new(instance: &str, report: &SolveReport, class: Class, feasible: bool) -> Self {
        let f = report.breakdown.fractions();
        BenchRecord {
            csv_version: CSV_VERSION,
            instance: instance.to_string(),
            method: report.method.name().to_string(),
            class: class.name().to_string(),
            status: format!("{:?}", report.status).to_lowercase(),
            feasible,
            time_s: report.wall_time,
            gap_pct: report.gap.map(|g| 100.0 * g),
            nodes: report.nodes,
            pricing_rounds: report.pricing_rounds,
            exact_pricing: f.exact_pricing,
            integer_rmp: f.integer_rmp,
            branching: f.branching,
            rmp_resolve: f.rmp_resolve,
            other: f.other,
        }
    }

    fn breakdown(&self) -> TimeBreakdown {
        TimeBreakdown {
            exact_pricing: self.exact_pricing,
            integer_rmp: self.integer_rmp,
            branching: self.branching,
            rmp_resolve: self.rmp_resolve,
            other: self.other,
        }
    }
}

/// Per-method statistics of one class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MethodRow {
    pub solved: usize,
    pub solved_feasible: usize,
    pub mean_time: Option<f64>,
    /// Over feasible instances where the method reports a gap.
    pub mean_gap_pct: Option<f64>,
    pub mean_nodes: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassRow {
    pub class: Class,
    pub instances: usize,
    pub feasible: usize,
    pub compact: MethodRow,
    pub dw: MethodRow,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn method_row(records: &[&BenchRecord]) -> MethodRow {
    MethodRow {
        solved: records.iter().filter(|r| r.status != "limit").count(),
        solved_feasible: records.iter().filter(|r| r.status == "optimal").count(),
        mean_time: mean(records.iter().map(|r| r.time_s)),
        mean_gap_pct: mean(records.iter().filter(|r| r.feasible).filter_map(|r| r.gap_pct)),
        mean_nodes: mean(records.iter().map(|r| r.nodes as f64)),
    }
}

/// Rows for easy, medium and hard, in that order.
pub fn aggregate(records: &[BenchRecord]) -> Vec<ClassRow> {
    [Class::Easy, Class::Medium, Class::Hard]
        .into_iter()
        .map(|class| {
            let of = |method: &str| -> Vec<&BenchRecord> {
                records
                    .iter()
                    .filter(|r| r.class == class.name() && r.method == method)
                    .collect()
            };
            let (c, d) = (of("compact"), of("dw"));
            ClassRow {
                class,
                instances: c.len().max(d.len()),
                feasible: c.iter().filter(|r| r.feasible).count(),
                compact: method_row(&c),
                dw: method_row(&d),
            }
        })
        .collect()
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

/// Text table: one line per class with instance counts and per-method
/// solved counts (feasible in parentheses), mean time, mean gap and mean
/// nodes.
pub fn render_table(rows: &[ClassRow], excluded_fast: usize, excluded_none: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>10} | {:>9} {:>9} {:>8} {:>9} | {:>9} {:>9} {:>8} {:>9}",
        "subset", "instances", "c.solved", "c.time", "c.gap%", "c.nodes", "dw.solved", "dw.time", "dw.gap%", "dw.nodes"
    );
    for r in rows {
        let m = |m: &MethodRow| {
            format!(
                "{:>9} {:>9} {:>8} {:>9}",
                format!("{}({})", m.solved, m.solved_feasible),
                opt(m.mean_time, 2),
                opt(m.mean_gap_pct, 1),
                opt(m.mean_nodes, 1)
            )
        };
        let _ = writeln!(
            s,
            "{:<8} {:>10} | {} | {}",
            r.class.name(),
            format!("{}({})", r.instances, r.feasible),
            m(&r.compact),
            m(&r.dw)
        );
    }
    let _ = writeln!(
        s,
        "excluded: {excluded_fast} solved by both in under {EXCLUDE_BELOW_SECS} s, {excluded_none} without any incumbent"
    );
    s
}

/// Mean share of solve time per activity and method over included instances.
pub fn render_breakdown(records: &[BenchRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>13} {:>12} {:>10} {:>12} {:>7}",
        "method", "exact-pricing", "integer-rmp", "branching", "rmp-resolve", "other"
    );
    for method in ["compact", "dw"] {
        let rows: Vec<TimeBreakdown> = records
            .iter()
            .filter(|r| r.method == method && !r.class.starts_with("excluded"))
            .map(BenchRecord::breakdown)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let avg = |f: fn(&TimeBreakdown) -> f64| 100.0 * rows.iter().map(f).sum::<f64>() / n;
        let _ = writeln!(
            s,
            "{:<8} {:>12.1}% {:>11.1}% {:>9.1}% {:>11.1}% {:>6.1}%",
            method,
            avg(|b| b.exact_pricing),
            avg(|b| b.integer_rmp),
            avg(|b| b.branching),
            avg(|b| b.rmp_resolve),
            avg(|b| b.other)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use pmsched::report::Method;

    fn report(method: Method, status: SolveStatus, time: f64, primal: Option<f64>) -> SolveReport {
        let mut r = SolveReport::new(method);
        r.status = status;
        r.wall_time = time;
        r.primal_bound = primal;
        r
    }

    use SolveStatus::*;

    #[test]
    fn classification_rules() {
        let c = |cs, ct, cp, ds, dt, dp| {
            classify(&report(Method::Compact, cs, ct, cp), &report(Method::Dw, ds, dt, dp))
        };
        assert_eq!(c(Optimal, 1.0, Some(1.0), Optimal, 4.9, Some(1.0)), Class::ExcludedFast);
        assert_eq!(c(Infeasible, 0.1, None, Infeasible, 0.2, None), Class::ExcludedFast);
        // One fast proof is not enough for exclusion.
        assert_eq!(c(Optimal, 1.0, Some(1.0), Optimal, 5.0, Some(1.0)), Class::Easy);
        assert_eq!(c(Limit, 300.0, None, Infeasible, 9.9, None), Class::Easy);
        assert_eq!(c(Limit, 300.0, Some(3.0), Optimal, 10.0, Some(2.0)), Class::Medium);
        assert_eq!(c(Optimal, 250.0, Some(2.0), Limit, 300.0, Some(2.0)), Class::Medium);
        assert_eq!(c(Limit, 300.0, Some(3.0), Limit, 300.0, None), Class::Hard);
        assert_eq!(c(Limit, 300.0, None, Limit, 300.0, None), Class::ExcludedNoIncumbent);
    }

    #[test]
    fn gap_mean_skips_infeasible_instances() {
        let mut a = report(Method::Dw, Infeasible, 20.0, None);
        a.nodes = 3;
        let mut b = report(Method::Dw, Optimal, 40.0, Some(4.0));
        b.dual_bound = Some(4.0);
        b.set_gap();
        b.nodes = 5;
        let recs = vec![
            BenchRecord::new("a", &a, Class::Medium, false),
            BenchRecord::new("b", &b, Class::Medium, true),
        ];
        let rows = aggregate(&recs);
        let dw = &rows[1].dw;
        assert_eq!(rows[1].instances, 2);
        assert_eq!((dw.solved, dw.solved_feasible), (2, 1));
        assert_eq!(dw.mean_time, Some(30.0));
        assert_eq!(dw.mean_nodes, Some(4.0));
        assert_eq!(dw.mean_gap_pct, Some(0.0));
        // Only the infeasible instance: no gap at all.
        let rows = aggregate(&recs[..1]);
        assert_eq!(rows[1].dw.mean_gap_pct, None);
    }

    #[test]
    fn record_fractions_sum_to_one() {
        let mut r = report(Method::Dw, Optimal, 1.0, Some(1.0));
        r.breakdown = TimeBreakdown {
            exact_pricing: 0.3,
            integer_rmp: 0.1,
            branching: 0.05,
            rmp_resolve: 0.2,
            other: 0.35,
        };
        let rec = BenchRecord::new("x", &r, Class::Easy, true);
        assert!((rec.breakdown().total() - 1.0).abs() <= 0.01);
    }
}
