//! Constraint checks and objective evaluation for candidate solutions.
//!
//! Coverage, assignment and routing are checked with exact integer logic. The
//! MTZ subtour constraints are checked structurally: a route that is a
//! permutation of the open set is a single depot-anchored path, and its visit
//! positions are a valid assignment of the stop counters.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::{CostBreakdown, Solution};

/// Constraint family of the combined covering/routing program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintFamily {
    /// Assignment only to a covering facility.
    Coverage,
    /// Assignment only to an open facility.
    OpenFacility,
    /// Every location assigned exactly once.
    SingleAssignment,
    /// Depart the origin once, enter the terminal once, flow balance.
    Path,
    /// Every open facility entered and left exactly once, closed ones never.
    VisitOnce,
    /// No subtours.
    Subtour,
    /// No self loops.
    SelfLoop,
}

impl ConstraintFamily {
    pub fn tag(self) -> &'static str {
        match self {
            ConstraintFamily::Coverage => "C2",
            ConstraintFamily::OpenFacility => "C3",
            ConstraintFamily::SingleAssignment => "C4",
            ConstraintFamily::Path => "PATH",
            ConstraintFamily::VisitOnce => "C10",
            ConstraintFamily::Subtour => "SUBTOUR",
            ConstraintFamily::SelfLoop => "C14",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: ConstraintFamily,
    /// Location indices involved.
    pub indices: Vec<usize>,
    pub message: String,
}

impl Violation {
    fn new(constraint: ConstraintFamily, indices: Vec<usize>, message: String) -> Self {
        Violation {
            constraint,
            indices,
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.constraint.tag(), self.message)
    }
}

/// Checks the covering part: coverage, open-facility and single-assignment constraints.
pub fn check_scp(inst: &Instance, open: &[bool], assignment: &[usize]) -> Result<Vec<Violation>> {
    let n = inst.n();
    if open.len() != n {
        return Err(Error::dim("open vector", n, open.len()));
    }
    if assignment.len() != n {
        return Err(Error::dim("assignment", n, assignment.len()));
    }
    let mut out = Vec::new();
    for (j, &i) in assignment.iter().enumerate() {
        if i >= n {
            out.push(Violation::new(
                ConstraintFamily::SingleAssignment,
                vec![j],
                format!("location {j} is assigned to nonexistent facility {i}"),
            ));
            continue;
        }
        if !inst.covers(i, j) {
            out.push(Violation::new(
                ConstraintFamily::Coverage,
                vec![i, j],
                format!(
                    "location {j} assigned to facility {i} at distance {} > {}",
                    inst.dist(i, j),
                    inst.coverage_km()
                ),
            ));
        }
        if !open[i] {
            out.push(Violation::new(
                ConstraintFamily::OpenFacility,
                vec![i, j],
                format!("location {j} assigned to closed facility {i}"),
            ));
        }
    }
    Ok(out)
}

/// Checks the routing part: the route must be a permutation of the open set.
pub fn check_route(inst: &Instance, open: &[bool], route: &[usize]) -> Result<Vec<Violation>> {
    let n = inst.n();
    if open.len() != n {
        return Err(Error::dim("open vector", n, open.len()));
    }
    let mut out = Vec::new();
    if route.is_empty() {
        out.push(Violation::new(
            ConstraintFamily::Path,
            vec![],
            "route is empty: the origin must be departed exactly once".into(),
        ));
    }
    let mut visits = vec![0usize; n];
    for (pos, &loc) in route.iter().enumerate() {
        if loc >= n {
            out.push(Violation::new(
                ConstraintFamily::Path,
                vec![loc],
                format!("route position {pos} names nonexistent location {loc}"),
            ));
            continue;
        }
        if pos > 0 && route[pos - 1] == loc {
            out.push(Violation::new(
                ConstraintFamily::SelfLoop,
                vec![loc],
                format!("self loop at location {loc}"),
            ));
        }
        visits[loc] += 1;
    }
    for (loc, (&count, &is_open)) in visits.iter().zip(open).enumerate() {
        match (is_open, count) {
            (true, 1) | (false, 0) => {}
            (true, 0) => out.push(Violation::new(
                ConstraintFamily::VisitOnce,
                vec![loc],
                format!("open facility {loc} is never visited"),
            )),
            (false, _) => out.push(Violation::new(
                ConstraintFamily::VisitOnce,
                vec![loc],
                format!("closed location {loc} is visited"),
            )),
            (true, k) => out.push(Violation::new(
                ConstraintFamily::VisitOnce,
                vec![loc],
                format!("open facility {loc} is visited {k} times"),
            )),
        }
    }
    Ok(out)
}

/// Transport cost of the closed walk depot → route → depot.
pub fn route_cost(inst: &Instance, route: &[usize]) -> f64 {
    inst.per_km() * route_length(inst, route)
}

pub fn route_length(inst: &Instance, route: &[usize]) -> f64 {
    let (Some(&first), Some(&last)) = (route.first(), route.last()) else {
        return 0.0;
    };
    let inner: f64 = route.windows(2).map(|w| inst.dist(w[0], w[1])).sum();
    inst.depot_dist(first) + inner + inst.depot_dist(last)
}

/// Objective breakdown of a solution, rejecting infeasible ones.
pub fn objective(inst: &Instance, sol: &Solution) -> Result<CostBreakdown> {
    objective_parts(inst, &sol.open, &sol.assignment, &sol.route)
}

pub fn objective_parts(
    inst: &Instance,
    open: &[bool],
    assignment: &[usize],
    route: &[usize],
) -> Result<CostBreakdown> {
    let mut violations = check_scp(inst, open, assignment)?;
    violations.extend(check_route(inst, open, route)?);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    Ok(evaluate(inst, open, assignment, route))
}

/// Objective without feasibility checks; callers guarantee feasibility.
pub(crate) fn evaluate(
    inst: &Instance,
    open: &[bool],
    assignment: &[usize],
    route: &[usize],
) -> CostBreakdown {
    let facility = open
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .map(|(i, _)| inst.fixed_cost(i))
        .sum();
    let assign = assignment
        .iter()
        .enumerate()
        .map(|(j, &i)| inst.assign_cost(i, j))
        .sum();
    CostBreakdown::new(facility, assign, route_cost(inst, route))
}
