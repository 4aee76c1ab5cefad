//! Problem data: node geometry, cost parameters and the coverage relation.
//!
//! Locations are indexed `0..n`. The distance matrix additionally carries the
//! depot as node 0, so location `i` is node `i + 1` in [`Instance::node_dist`].
//! The route terminal is the depot revisited and shares its distances.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textfmt::{Reader, Writer};

pub const DEFAULT_COVERAGE_KM: f64 = 5.0;
pub const DEFAULT_SIDE_KM: f64 = 15.0;
pub const DEFAULT_LOCATIONS: usize = 10;

const INSTANCE_MAGIC: &str = "covertour-instance";

/// Planar node geometry shared by many cost variants. Index 0 is the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub id: u64,
    pub coords: Vec<(f64, f64)>,
}

impl NodeSet {
    pub fn new(id: u64, coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidArgument(
                "a node set needs a depot and at least one location".into(),
            ));
        }
        if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Invariant("node coordinates must be finite".into()));
        }
        Ok(NodeSet { id, coords })
    }

    /// Number of customer locations (depot excluded).
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    /// Symmetric Euclidean distance matrix over all nodes, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let m = self.coords.len();
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let (xi, yi) = self.coords[i];
                let (xj, yj) = self.coords[j];
                let dist = (xi - xj).hypot(yi - yj);
                d[i * m + j] = dist;
                d[j * m + i] = dist;
            }
        }
        d
    }
}

/// Draws `n + 1` points uniformly from `[0, side_km]²`; point 0 is the depot.
pub fn generate_node_set(seed: u64, n: usize, side_km: f64) -> Result<NodeSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("node set needs n >= 1".into()));
    }
    if !(side_km > 0.0 && side_km.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "side length must be positive, got {side_km}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..=n)
        .map(|_| (rng.gen_range(0.0..=side_km), rng.gen_range(0.0..=side_km)))
        .collect();
    NodeSet::new(seed, coords)
}

/// Sampling ranges for the cost side of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConfig {
    pub facility: (f64, f64),
    /// Per-destination slope of the linear assignment cost in distance.
    pub assignment_slope: (f64, f64),
    pub transport_per_km: (f64, f64),
    pub coverage_km: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            facility: (28.0, 32.0),
            assignment_slope: (1.5, 2.5),
            transport_per_km: (0.9, 1.1),
            coverage_km: DEFAULT_COVERAGE_KM,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("facility", self.facility),
            ("assignment_slope", self.assignment_slope),
            ("transport_per_km", self.transport_per_km),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} range must be finite and non-negative, got [{lo}, {hi}]"
                )));
            }
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "{name} range is degenerate: lo {lo} > hi {hi}"
                )));
            }
        }
        if !(self.coverage_km > 0.0 && self.coverage_km.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coverage distance must be positive, got {}",
                self.coverage_km
            )));
        }
        Ok(())
    }
}

/// One optimization problem. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    node_set_id: u64,
    n: usize,
    fixed: Vec<f64>,
    assign: Vec<f64>,
    per_km: f64,
    dist: Vec<f64>,
    coverage_km: f64,
    covers: Vec<bool>,
}

impl Instance {
    /// Builds an instance from raw parameters and checks every invariant.
    ///
    /// `assign` is `n × n` with `assign[i*n + j]` the cost of serving location
    /// `j` from a facility at `i`; `dist` is `(n+1) × (n+1)` over depot and
    /// locations.
    pub fn new(
        node_set_id: u64,
        fixed: Vec<f64>,
        assign: Vec<f64>,
        per_km: f64,
        dist: Vec<f64>,
        coverage_km: f64,
    ) -> Result<Self> {
        let n = fixed.len();
        if n == 0 {
            return Err(Error::InvalidArgument("instance needs n >= 1".into()));
        }
        if assign.len() != n * n {
            return Err(Error::dim("c", n * n, assign.len()));
        }
        let m = n + 1;
        if dist.len() != m * m {
            return Err(Error::dim("d", m * m, dist.len()));
        }
        validate_params(n, &fixed, &assign, per_km, &dist, coverage_km)?;
        let covers = coverage_from_distance(&dist, m, coverage_km);
        Ok(Instance {
            node_set_id,
            n,
            fixed,
            assign,
            per_km,
            dist,
            coverage_km,
            covers,
        })
    }

    /// Assignment cost `slopes[j] * d(i, j)` for every pair of locations.
    pub fn from_node_set(
        nodes: &NodeSet,
        fixed: Vec<f64>,
        slopes: &[f64],
        per_km: f64,
        coverage_km: f64,
    ) -> Result<Self> {
        let n = nodes.n();
        if slopes.len() != n {
            return Err(Error::dim("assignment slopes", n, slopes.len()));
        }
        let dist = nodes.distance_matrix();
        let m = n + 1;
        let mut assign = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assign[i * n + j] = slopes[j] * dist[(i + 1) * m + j + 1];
                }
            }
        }
        Instance::new(nodes.id, fixed, assign, per_km, dist, coverage_km)
    }

    pub fn node_set_id(&self) -> u64 {
        self.node_set_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fixed_cost(&self, i: usize) -> f64 {
        self.fixed[i]
    }

    pub fn fixed_costs(&self) -> &[f64] {
        &self.fixed
    }

    /// Cost of serving location `j` from a facility at location `i`.
    pub fn assign_cost(&self, i: usize, j: usize) -> f64 {
        self.assign[i * self.n + j]
    }

    pub fn assign_costs(&self) -> &[f64] {
        &self.assign
    }

    pub fn per_km(&self) -> f64 {
        self.per_km
    }

    pub fn coverage_km(&self) -> f64 {
        self.coverage_km
    }

    /// Distance between nodes, where node 0 is the depot and node `i + 1` is location `i`.
    pub fn node_dist(&self, u: usize, v: usize) -> f64 {
        self.dist[u * (self.n + 1) + v]
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.node_dist(i + 1, j + 1)
    }

    pub fn depot_dist(&self, i: usize) -> f64 {
        self.node_dist(0, i + 1)
    }

    /// Row-major `(n+1) × (n+1)` distance matrix, depot first.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// Whether a facility at `i` may serve location `j`.
    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.covers[i * self.n + j]
    }

    pub fn coverage(&self) -> &[bool] {
        &self.covers
    }

    /// Copy with every monetary parameter multiplied by `factor`.
    pub fn scale_costs(&self, factor: f64) -> Result<Self> {
        Instance::new(
            self.node_set_id,
            self.fixed.iter().map(|v| v * factor).collect(),
            self.assign.iter().map(|v| v * factor).collect(),
            self.per_km * factor,
            self.dist.clone(),
            self.coverage_km,
        )
    }

    /// Copy with a different coverage distance.
    pub fn with_coverage(&self, coverage_km: f64) -> Result<Self> {
        Instance::new(
            self.node_set_id,
            self.fixed.clone(),
            self.assign.clone(),
            self.per_km,
            self.dist.clone(),
            coverage_km,
        )
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::new(INSTANCE_MAGIC, 1);
        w.scalar("node_set_id", self.node_set_id);
        w.scalar("n", self.n);
        w.scalar("D", self.coverage_km);
        w.scalar("p", self.per_km);
        w.line("f", &self.fixed);
        w.matrix("c", self.n, &self.assign);
        w.matrix("d", self.n + 1, &self.dist);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text, INSTANCE_MAGIC, 1)?;
        let node_set_id = r.scalar("node_set_id")?;
        let n: usize = r.scalar("n")?;
        let coverage_km = r.scalar("D")?;
        let per_km = r.scalar("p")?;
        let fixed: Vec<f64> = r.vector("f")?;
        if fixed.len() != n {
            return Err(Error::dim("f", n, fixed.len()));
        }
        let (rows, cols, assign) = r.matrix("c")?;
        if rows != n || cols != n {
            return Err(Error::dim("c rows x cols", n * n, rows * cols));
        }
        let (rows, cols, dist) = r.matrix("d")?;
        if rows != n + 1 || cols != n + 1 {
            return Err(Error::dim("d rows x cols", (n + 1) * (n + 1), rows * cols));
        }
        r.expect_end()?;
        Instance::new(node_set_id, fixed, assign, per_km, dist, coverage_km)
    }
}

/// Stochastic cost variant over a fixed geometry.
pub fn generate_instance(nodes: &NodeSet, cost_seed: u64, cfg: &CostConfig) -> Result<Instance> {
    cfg.validate()?;
    let n = nodes.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cost_seed);
    let fixed = (0..n).map(|_| draw(&mut rng, cfg.facility)).collect();
    let slopes: Vec<f64> = (0..n).map(|_| draw(&mut rng, cfg.assignment_slope)).collect();
    let per_km = draw(&mut rng, cfg.transport_per_km);
    Instance::from_node_set(nodes, fixed, &slopes, per_km, cfg.coverage_km)
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// `a[i][j] = d[i][j] <= coverage` over customer locations only.
///
/// `dist` is the `m × m` node matrix with the depot at index 0; the result is
/// `(m-1) × (m-1)`, row-major.
pub fn coverage_from_distance(dist: &[f64], m: usize, coverage_km: f64) -> Vec<bool> {
    let n = m.saturating_sub(1);
    let mut a = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = dist[(i + 1) * m + j + 1] <= coverage_km;
        }
    }
    a
}

fn validate_params(
    n: usize,
    fixed: &[f64],
    assign: &[f64],
    per_km: f64,
    dist: &[f64],
    coverage_km: f64,
) -> Result<()> {
    let m = n + 1;
    if let Some(i) = fixed.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Invariant(format!(
            "f[{i}] = {} must be finite and non-negative",
            fixed[i]
        )));
    }
    if !(per_km.is_finite() && per_km >= 0.0) {
        return Err(Error::Invariant(format!("p = {per_km} must be non-negative")));
    }
    if !(coverage_km.is_finite() && coverage_km > 0.0) {
        return Err(Error::Invariant(format!("D = {coverage_km} must be positive")));
    }
    for i in 0..n {
        for j in 0..n {
            let v = assign[i * n + j];
            if !v.is_finite() {
                return Err(Error::Invariant(format!("c[{i}][{j}] is not finite")));
            }
        }
        if assign[i * n + i] != 0.0 {
            return Err(Error::Invariant(format!(
                "c[{i}][{i}] = {} must be zero",
                assign[i * n + i]
            )));
        }
    }
    for u in 0..m {
        if dist[u * m + u] != 0.0 {
            return Err(Error::Invariant(format!(
                "d[{u}][{u}] = {} must be zero",
                dist[u * m + u]
            )));
        }
        for v in 0..m {
            let duv = dist[u * m + v];
            if !duv.is_finite() || duv < 0.0 {
                return Err(Error::Invariant(format!(
                    "d[{u}][{v}] = {duv} must be finite and non-negative"
                )));
            }
            if duv != dist[v * m + u] {
                return Err(Error::Invariant(format!(
                    "d is not symmetric at ({u}, {v}): {duv} != {}",
                    dist[v * m + u]
                )));
            }
        }
    }
    Ok(())
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, inst.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::from_text(&text)
}
