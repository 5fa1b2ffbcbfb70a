//! Joint production and maintenance scheduling for fleets of multi-component
//! machines.
//!
//! Two exact solvers share one model: a compact convex MINLP solved by
//! LP-based branch-and-bound with outer approximation, and a pattern-based
//! reformulation solved by branch-and-price.

pub mod branch_price;
pub mod compact;
pub mod instgen;
pub mod lp;
pub mod machine;
pub mod master;
pub mod minlp;
pub mod model;
pub mod par;
pub mod pricing;
pub mod report;
