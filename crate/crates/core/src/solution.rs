use crate::error::{Error, Result};
use crate::feasibility;
use crate::instance::Instance;

/// The three objective components and their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub facility: f64,
    pub assignment: f64,
    pub transport: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(facility: f64, assignment: f64, transport: f64) -> Self {
        CostBreakdown {
            facility,
            assignment,
            transport,
            total: facility + assignment + transport,
        }
    }

    /// Componentwise sum; `total` is re-derived from the summed components.
    pub fn accumulate(&mut self, other: &CostBreakdown) {
        *self = CostBreakdown::new(
            self.facility + other.facility,
            self.assignment + other.assignment,
            self.transport + other.transport,
        );
    }
}

/// A feasible solution: open facilities, assignment and route through the
/// open set. `route` excludes the depot at both ends; the visit position of a
/// facility is its MTZ stop counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub open: Vec<bool>,
    /// `assignment[j]` is the facility serving location `j`.
    pub assignment: Vec<usize>,
    pub route: Vec<usize>,
    pub cost: CostBreakdown,
}

impl Solution {
    /// Checks feasibility and evaluates the objective.
    pub fn new(
        inst: &Instance,
        open: Vec<bool>,
        assignment: Vec<usize>,
        route: Vec<usize>,
    ) -> Result<Self> {
        let cost = feasibility::objective_parts(inst, &open, &assignment, &route)?;
        Ok(Solution {
            open,
            assignment,
            route,
            cost,
        })
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Binary arc matrix of the route, see [`ArcMatrix`].
    pub fn arcs(&self) -> ArcMatrix {
        ArcMatrix::from_route(self.open.len(), &self.route)
    }
}

/// Matrix over rows `{depot, loc 0..n}` and columns `{loc 0..n, terminal}`.
///
/// Row 0 is the depot and row `i + 1` is location `i`; column `j < n` is
/// location `j` and column `n` is the terminal (depot revisited). Entries are
/// either arc probabilities or 0/1 arc indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ArcMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        ArcMatrix {
            n,
            values: vec![value; (n + 1) * (n + 1)],
        }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (n + 1) * (n + 1) {
            return Err(Error::dim("arc matrix", (n + 1) * (n + 1), values.len()));
        }
        Ok(ArcMatrix { n, values })
    }

    pub fn from_route(n: usize, route: &[usize]) -> Self {
        let mut m = ArcMatrix::filled(n, 0.0);
        let mut row = 0;
        for &loc in route {
            m.values[row * (n + 1) + loc] = 1.0;
            row = loc + 1;
        }
        m.values[row * (n + 1) + n] = 1.0;
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn from_depot(&self, to: usize) -> f64 {
        self.values[to]
    }

    pub fn between(&self, from: usize, to: usize) -> f64 {
        self.values[(from + 1) * (self.n + 1) + to]
    }

    pub fn to_terminal(&self, from: usize) -> f64 {
        self.values[(from + 1) * (self.n + 1) + self.n]
    }

    /// Value on the arc leaving `from` (`None` = depot) into location `to`.
    pub fn get(&self, from: Option<usize>, to: usize) -> f64 {
        match from {
            None => self.from_depot(to),
            Some(i) => self.between(i, to),
        }
    }

    pub fn set(&mut self, from: Option<usize>, to: usize, value: f64) {
        let row = from.map_or(0, |i| i + 1);
        self.values[row * (self.n + 1) + to] = value;
    }
}
