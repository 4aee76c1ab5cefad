//! Turning predicted probabilities into feasible solutions.
//!
//! [`repair_scp`] thresholds the open-facility probabilities at `alpha`, sends
//! each sub-threshold location to its cheapest covering above-threshold
//! neighbour, and opens the location itself when no such neighbour exists.
//! [`extract_route`] greedily follows the most probable arc from the depot
//! through the open set. Both are total on valid inputs and their outputs
//! always pass the feasibility checks.

use crate::error::{Error, Result};
use crate::exact::cheapest_cover;
use crate::feasibility;
use crate::instance::Instance;
use crate::solution::{ArcMatrix, Solution};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RepairConfig {
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            alpha: DEFAULT_ALPHA,
            alpha_grid: default_grid(),
        }
    }
}

impl RepairConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_grid(&self.alpha_grid)
    }
}

/// `0.1, 0.2, …, 0.9`.
pub fn default_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("threshold grid is empty".into()));
    }
    for &a in grid {
        check_alpha(a)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "threshold grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_probabilities(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidArgument(format!(
            "{what}[{i}] = {} is not a probability",
            values[i]
        ))),
    }
}

/// Threshold repair of the open-facility probabilities.
///
/// Locations are visited in ascending order. A location with `g[i] >= alpha`
/// opens and serves itself. Otherwise it stays closed if some covering `k`
/// has `g[k] >= alpha`, and is served by the cheapest such `k` (smallest index
/// on ties); failing that it is forced open.
pub fn repair_scp(inst: &Instance, g: &[f64], alpha: f64) -> Result<(Vec<bool>, Vec<usize>)> {
    let n = inst.n();
    if g.len() != n {
        return Err(Error::dim("facility probabilities", n, g.len()));
    }
    check_probabilities("g", g)?;
    check_alpha(alpha)?;

    let mut open = vec![false; n];
    let mut assignment = vec![0; n];
    for i in 0..n {
        if g[i] >= alpha {
            open[i] = true;
            assignment[i] = i;
            continue;
        }
        match cheapest_cover(inst, i, |k| g[k] >= alpha) {
            Some(k) => assignment[i] = k,
            None => {
                open[i] = true;
                assignment[i] = i;
            }
        }
    }
    Ok((open, assignment))
}

/// Greedy route: from the current node take the unvisited open facility with
/// the largest arc probability, smallest index on ties.
pub fn extract_route(inst: &Instance, open: &[bool], arcs: &ArcMatrix) -> Result<Vec<usize>> {
    let n = inst.n();
    if open.len() != n {
        return Err(Error::dim("open vector", n, open.len()));
    }
    if arcs.n() != n {
        return Err(Error::dim("arc probabilities", n, arcs.n()));
    }
    if arcs.values().iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("arc probabilities contain NaN".into()));
    }
    let mut remaining: Vec<usize> = (0..n).filter(|&i| open[i]).collect();
    if remaining.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot route an empty open set".into(),
        ));
    }
    let mut route = Vec::with_capacity(remaining.len());
    let mut current = None;
    while !remaining.is_empty() {
        let mut pick = 0;
        for (idx, &cand) in remaining.iter().enumerate().skip(1) {
            if arcs.get(current, cand) > arcs.get(current, remaining[pick]) {
                pick = idx;
            }
        }
        let next = remaining.remove(pick);
        route.push(next);
        current = Some(next);
    }
    Ok(route)
}

/// Source of arc probabilities for a repaired open set.
pub trait ArcPredictor {
    fn arc_probs(&self, inst: &Instance, open: &[bool]) -> Result<ArcMatrix>;
}

impl<F> ArcPredictor for F
where
    F: Fn(&Instance, &[bool]) -> Result<ArcMatrix>,
{
    fn arc_probs(&self, inst: &Instance, open: &[bool]) -> Result<ArcMatrix> {
        self(inst, open)
    }
}

/// Full repair: threshold repair, arc prediction on the repaired open set,
/// greedy route and objective.
pub fn repair_full(
    inst: &Instance,
    g: &[f64],
    arcs: &dyn ArcPredictor,
    alpha: f64,
) -> Result<Solution> {
    let (open, assignment) = repair_scp(inst, g, alpha)?;
    let probs = arcs.arc_probs(inst, &open)?;
    let route = extract_route(inst, &open, &probs)?;
    Solution::new(inst, open, assignment, route)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Smallest grid threshold attaining the minimum total.
    pub alpha_star: f64,
    pub per_alpha: Vec<(f64, Solution)>,
    /// Every grid threshold within 1e-9 of the minimum total.
    pub best_alphas: Vec<f64>,
}

impl SweepResult {
    pub fn best(&self) -> &Solution {
        &self
            .per_alpha
            .iter()
            .find(|(a, _)| *a == self.alpha_star)
            .expect("alpha_star comes from the grid")
            .1
    }

    /// Whether every grid value is optimal for this instance.
    pub fn is_indifferent(&self) -> bool {
        self.best_alphas.len() == self.per_alpha.len()
    }
}

pub fn sweep_alpha(
    inst: &Instance,
    g: &[f64],
    arcs: &dyn ArcPredictor,
    grid: &[f64],
) -> Result<SweepResult> {
    check_grid(grid)?;
    let per_alpha = grid
        .iter()
        .map(|&a| repair_full(inst, g, arcs, a).map(|s| (a, s)))
        .collect::<Result<Vec<_>>>()?;
    let min = per_alpha
        .iter()
        .map(|(_, s)| s.cost.total)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1.0);
    let best_alphas: Vec<f64> = per_alpha
        .iter()
        .filter(|(_, s)| s.cost.total <= min + tol)
        .map(|(a, _)| *a)
        .collect();
    Ok(SweepResult {
        alpha_star: best_alphas[0],
        per_alpha,
        best_alphas,
    })
}

/// Re-checks a repaired solution; used where infeasibility must be a hard failure.
pub fn verify(inst: &Instance, sol: &Solution) -> Result<()> {
    let mut v = feasibility::check_scp(inst, &sol.open, &sol.assignment)?;
    v.extend(feasibility::check_route(inst, &sol.open, &sol.route)?);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::e3;
    use crate::instance::{generate_instance, generate_node_set, CostConfig};
    use proptest::prelude::*;

    fn uniform(inst: &Instance, _open: &[bool]) -> Result<ArcMatrix> {
        Ok(ArcMatrix::filled(inst.n(), 0.5))
    }

    #[test]
    fn all_above_threshold_opens_everything() {
        let (open, assign) = repair_scp(&e3(), &[0.9, 0.6, 0.5], 0.5).unwrap();
        assert_eq!(open, vec![true; 3]);
        assert_eq!(assign, vec![0, 1, 2]);
    }

    #[test]
    fn e3_neighbour_assignment() {
        let (open, assign) = repair_scp(&e3(), &[0.8, 0.3, 0.9], 0.5).unwrap();
        assert_eq!(open, vec![true, false, true]);
        assert_eq!(assign, vec![0, 0, 2]);
    }

    #[test]
    fn e3_no_neighbour_above_threshold_forces_open() {
        let (open, assign) = repair_scp(&e3(), &[0.3, 0.4, 0.2], 0.5).unwrap();
        assert_eq!(open, vec![true; 3]);
        assert_eq!(assign, vec![0, 1, 2]);
    }

    #[test]
    fn boundary_probability_opens() {
        let (open, assign) = repair_scp(&e3(), &[0.5, 0.2, 0.5], 0.5).unwrap();
        assert_eq!(open, vec![true, false, true]);
        assert_eq!(assign[1], 0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(repair_scp(&e3(), &[0.5, 0.5], 0.5).is_err());
        assert!(repair_scp(&e3(), &[0.5, 1.5, 0.5], 0.5).is_err());
        assert!(repair_scp(&e3(), &[0.5, f64::NAN, 0.5], 0.5).is_err());
        assert!(repair_scp(&e3(), &[0.5; 3], 1.0).is_err());
        assert!(extract_route(&e3(), &[false; 3], &ArcMatrix::filled(3, 0.5)).is_err());
    }

    #[test]
    fn single_open_route() {
        let route = extract_route(&e3(), &[false, true, false], &ArcMatrix::filled(3, 0.1)).unwrap();
        assert_eq!(route, vec![1]);
    }

    #[test]
    fn greedy_follows_largest_probability() {
        let mut arcs = ArcMatrix::filled(3, 0.0);
        arcs.set(None, 0, 0.7);
        arcs.set(None, 2, 0.6);
        arcs.set(Some(0), 2, 0.01);
        let route = extract_route(&e3(), &[true, false, true], &arcs).unwrap();
        assert_eq!(route, vec![0, 2]);

        arcs.set(None, 2, 0.9);
        assert_eq!(extract_route(&e3(), &[true, false, true], &arcs).unwrap(), vec![2, 0]);
    }

    #[test]
    fn ties_take_smallest_index() {
        let mut arcs = ArcMatrix::filled(3, 0.0);
        arcs.set(None, 0, 0.5);
        arcs.set(None, 2, 0.5);
        assert_eq!(extract_route(&e3(), &[true, false, true], &arcs).unwrap(), vec![0, 2]);
    }

    #[test]
    fn uniform_provider_routes_in_index_order() {
        let nodes = generate_node_set(4, 8, 15.0).unwrap();
        let inst = generate_instance(&nodes, 9, &CostConfig::default()).unwrap();
        let sol = repair_full(&inst, &[0.0; 8], &uniform, 0.5).unwrap();
        assert_eq!(sol.route, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn e3_full_repair_reaches_optimum() {
        let provider = |inst: &Instance, _: &[bool]| {
            let mut arcs = ArcMatrix::filled(inst.n(), 0.0);
            arcs.set(None, 0, 0.7);
            arcs.set(None, 2, 0.6);
            Ok(arcs)
        };
        let sol = repair_full(&e3(), &[0.8, 0.3, 0.9], &provider, 0.5).unwrap();
        assert!((sol.cost.total - 41.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_probabilities_open_everything() {
        let sol = repair_full(&e3(), &[0.0; 3], &uniform, 0.5).unwrap();
        assert_eq!(sol.open, vec![true; 3]);
        let expected = 30.0 + 4.0 + 3.0 + 45f64.sqrt() + 10.0;
        assert!((sol.cost.total - expected).abs() < 1e-9);
    }

    #[test]
    fn decisive_probabilities_make_threshold_irrelevant() {
        let nodes = generate_node_set(21, 9, 15.0).unwrap();
        let inst = generate_instance(&nodes, 2, &CostConfig::default()).unwrap();
        let g = [0.05, 0.95, 0.05, 0.05, 0.95, 0.95, 0.05, 0.05, 0.95];
        let res = sweep_alpha(&inst, &g, &uniform, &default_grid()).unwrap();
        assert_eq!(res.best_alphas, default_grid());
        assert!(res.is_indifferent());
        let first = &res.per_alpha[0].1;
        assert!(res.per_alpha.iter().all(|(_, s)| s == first));
    }

    #[test]
    fn e3_sweep() {
        let g = [0.55, 0.45, 0.95];
        let res = sweep_alpha(&e3(), &g, &uniform, &default_grid()).unwrap();
        let all_open = 30.0 + 4.0 + 3.0 + 45f64.sqrt() + 10.0;
        for (a, sol) in &res.per_alpha {
            let expected = if *a <= 0.45 {
                all_open
            } else if *a <= 0.55 {
                41.0
            } else {
                all_open
            };
            assert!((sol.cost.total - expected).abs() < 1e-9, "alpha {a}");
        }
        assert_eq!(res.alpha_star, 0.5);
        assert_eq!(res.best_alphas, vec![0.5]);
        assert!((res.best().cost.total - 41.0).abs() < 1e-9);
    }

    #[test]
    fn grid_validation() {
        assert!(sweep_alpha(&e3(), &[0.5; 3], &uniform, &[]).is_err());
        assert!(sweep_alpha(&e3(), &[0.5; 3], &uniform, &[0.5, 0.4]).is_err());
        assert!(RepairConfig::default().validate().is_ok());
    }

    fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![Just(0.0), Just(1.0), Just(0.5), 0.0f64..=1.0],
            n,
        )
    }

    proptest! {
        #[test]
        fn repair_is_always_feasible(
            seed in any::<u64>(),
            g in probs(9),
            pz in probs(100),
            alpha_idx in 1usize..10,
        ) {
            let nodes = generate_node_set(seed, 9, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let alpha = alpha_idx as f64 / 10.0;
            let provider = |_: &Instance, _: &[bool]| ArcMatrix::from_values(9, pz.clone());
            let sol = repair_full(&inst, &g, &provider, alpha).unwrap();
            prop_assert!(verify(&inst, &sol).is_ok());
            for (gi, &open) in g.iter().zip(&sol.open) {
                if *gi >= alpha {
                    prop_assert!(open);
                }
            }
            prop_assert_eq!(sol.route.len(), sol.open_count());
        }

        #[test]
        fn sweep_minimum_dominates_grid(seed in any::<u64>(), g in probs(7)) {
            let nodes = generate_node_set(seed, 7, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let res = sweep_alpha(&inst, &g, &uniform, &default_grid()).unwrap();
            let best = res.best().cost.total;
            for (_, s) in &res.per_alpha {
                prop_assert!(best <= s.cost.total);
            }
        }
    }
}
