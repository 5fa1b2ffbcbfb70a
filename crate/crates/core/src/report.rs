//! Solver outcome records shared by both methods.

use crate::lp::LpError;
use crate::model::{ModelError, Schedule};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Compact,
    Dw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Compact => "compact",
            Method::Dw => "dw",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Limit,
}

/// Seconds spent per activity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeBreakdown {
    pub exact_pricing: f64,
    pub integer_rmp: f64,
    pub branching: f64,
    pub rmp_resolve: f64,
    pub other: f64,
}

impl TimeBreakdown {
    pub fn total(&self) -> f64 {
        self.exact_pricing + self.integer_rmp + self.branching + self.rmp_resolve + self.other
    }

    /// Same record scaled to fractions of its total (all in `other` when empty).
    pub fn fractions(&self) -> TimeBreakdown {
        let t = self.total();
        if t <= 0.0 {
            return TimeBreakdown {
                other: 1.0,
                ..Default::default()
            };
        }
        TimeBreakdown {
            exact_pricing: self.exact_pricing / t,
            integer_rmp: self.integer_rmp / t,
            branching: self.branching / t,
            rmp_resolve: self.rmp_resolve / t,
            other: self.other / t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Restricted master LP value after convergence at a node.
    Master,
    Lagrangian,
    Farley,
    /// Rounded up to the cost lattice.
    Tightened,
    /// Best-bound over open nodes, recorded when a node is selected.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub node: usize,
    pub kind: BoundKind,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Branched,
    Pruned,
    Integral,
    Infeasible,
    Limit,
}

impl NodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            NodeStatus::Branched => "branched",
            NodeStatus::Pruned => "pruned",
            NodeStatus::Integral => "integral",
            NodeStatus::Infeasible => "infeasible",
            NodeStatus::Limit => "limit",
        }
    }
}

/// One processed branch-and-price node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Local dual bound when the node was left.
    pub bound: f64,
    pub rounds: usize,
    /// Pool size when the node was left.
    pub columns: usize,
    pub status: NodeStatus,
}

/// Tab-separated node trace with a header line.
pub fn node_trace_tsv(nodes: &[NodeRecord]) -> String {
    let mut s = String::from("id\tparent\tdepth\tbound\trounds\tcolumns\tstatus\n");
    for n in nodes {
        let parent = n.parent.map_or_else(|| "-".to_string(), |p| p.to_string());
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            n.id,
            parent,
            n.depth,
            n.bound,
            n.rounds,
            n.columns,
            n.status.name()
        ));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    /// Cost of the best schedule found.
    pub primal_bound: Option<f64>,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub pricing_rounds: usize,
    /// Pricing rounds run on an infeasible restricted master.
    #[serde(default)]
    pub farkas_rounds: usize,
    pub columns: usize,
    pub wall_time: f64,
    pub breakdown: TimeBreakdown,
    #[serde(default)]
    pub bound_trace: Vec<BoundRecord>,
    #[serde(default)]
    pub node_trace: Vec<NodeRecord>,
}

impl SolveReport {
    pub fn new(method: Method) -> Self {
        SolveReport {
            method,
            status: SolveStatus::Limit,
            primal_bound: None,
            dual_bound: None,
            gap: None,
            nodes: 0,
            pricing_rounds: 0,
            farkas_rounds: 0,
            columns: 0,
            wall_time: 0.0,
            breakdown: TimeBreakdown::default(),
            bound_trace: Vec::new(),
            node_trace: Vec::new(),
        }
    }

    /// Fills `gap` from the bounds.
    pub fn set_gap(&mut self) {
        self.gap = match (self.primal_bound, self.dual_bound) {
            (Some(p), Some(d)) => Some(crate::master::rmp_gap(p, d)),
            _ => None,
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Relative gap at which a solve counts as optimal.
    pub gap_tol: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            time_limit: Some(Duration::from_secs(300)),
            node_limit: None,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub schedule: Option<Schedule>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_sum_to_one() {
        let b = TimeBreakdown {
            exact_pricing: 1.0,
            integer_rmp: 2.0,
            branching: 0.5,
            rmp_resolve: 0.25,
            other: 0.25,
        };
        assert!((b.fractions().total() - 1.0).abs() < 1e-12);
        assert_eq!(TimeBreakdown::default().fractions().other, 1.0);
    }

    #[test]
    fn report_json_roundtrip() {
        let mut r = SolveReport::new(Method::Dw);
        r.primal_bound = Some(10.0);
        r.dual_bound = Some(5.0);
        r.set_gap();
        assert_eq!(r.gap, Some(0.5));
        let back: SolveReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
