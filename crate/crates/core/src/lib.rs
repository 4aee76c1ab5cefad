//! Exact solving, learned prediction and feasibility repair for the combined
//! set covering and traveling salesman problem.
//!
//! A facility may be opened at any customer location; every location must be
//! served by an open facility within the coverage radius, and a single vehicle
//! leaves the depot, visits every open facility once and returns.

pub mod dataset;
pub mod error;
pub mod exact;
pub mod feasibility;
pub mod instance;
pub mod ml;
pub mod repair;
pub mod solution;
mod textfmt;

pub use error::{Error, Result};
pub use exact::{assign_optimal, label_dataset, solve_exact, tsp_optimal, LabeledInstance};
pub use feasibility::{check_route, check_scp, objective, ConstraintFamily, Violation};
pub use instance::{
    coverage_from_distance, generate_instance, generate_node_set, load_instance, save_instance,
    CostConfig, Instance, NodeSet,
};
pub use repair::{extract_route, repair_full, repair_scp, sweep_alpha, RepairConfig, SweepResult};
pub use solution::{ArcMatrix, CostBreakdown, Solution};
