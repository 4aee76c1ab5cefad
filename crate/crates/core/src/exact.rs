//! Exact solver by decomposition.
//!
//! For a fixed set of open facilities the problem separates into an
//! independent cheapest-cover assignment per location and a pure TSP over the
//! open set, so enumerating covering subsets and completing each with the
//! optimal assignment and a Held–Karp route yields the global optimum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feasibility::{self, route_cost};
use crate::instance::Instance;
use crate::solution::{ArcMatrix, Solution};

/// Largest open set the Held–Karp table is built for.
pub const MAX_ROUTE_STOPS: usize = 20;
/// Largest location count accepted by [`solve_exact`].
pub const MAX_EXACT_LOCATIONS: usize = 20;

/// Optimal assignment for a fixed open set: each location goes to the
/// cheapest covering open facility, smallest index on ties. Open facilities
/// serve themselves since `c[i][i] = 0`.
///
/// Returns [`Error::Uncovered`] naming the first location no open facility covers.
pub fn assign_optimal(inst: &Instance, open: &[bool]) -> Result<Vec<usize>> {
    let n = inst.n();
    if open.len() != n {
        return Err(Error::dim("open vector", n, open.len()));
    }
    (0..n)
        .map(|j| {
            if open[j] {
                return Ok(j);
            }
            cheapest_cover(inst, j, |i| open[i]).ok_or(Error::Uncovered(j))
        })
        .collect()
}

/// Cheapest facility `i` with `eligible(i)` covering `j`, smallest index on ties.
pub(crate) fn cheapest_cover(
    inst: &Instance,
    j: usize,
    eligible: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in (0..inst.n()).filter(|&i| eligible(i) && inst.covers(i, j)) {
        let c = inst.assign_cost(i, j);
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i)
}

/// Shortest closed walk from the depot through every open facility.
///
/// Ties (within a relative 1e-9) resolve to the lexicographically smallest
/// route. Returns the route and its transport cost.
pub fn tsp_optimal(inst: &Instance, open: &[bool]) -> Result<(Vec<usize>, f64)> {
    if open.len() != inst.n() {
        return Err(Error::dim("open vector", inst.n(), open.len()));
    }
    let stops: Vec<usize> = (0..open.len()).filter(|&i| open[i]).collect();
    let route = held_karp(inst, &stops)?;
    let cost = route_cost(inst, &route);
    Ok((route, cost))
}

/// Held–Karp over `stops` (ascending location indices), returning the route.
fn held_karp(inst: &Instance, stops: &[usize]) -> Result<Vec<usize>> {
    let k = stops.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "route needs at least one open facility".into(),
        ));
    }
    if k > MAX_ROUTE_STOPS {
        return Err(Error::TooLarge {
            what: "open facilities",
            value: k,
            limit: MAX_ROUTE_STOPS,
        });
    }
    let d = |a: usize, b: usize| inst.dist(stops[a], stops[b]);
    let full = (1usize << k) - 1;

    // rest[s * k + j]: shortest path starting at stop j, visiting every stop
    // in s (j not in s), then returning to the depot.
    let mut rest = vec![f64::INFINITY; (1usize << k) * k];
    for j in 0..k {
        rest[j] = inst.depot_dist(stops[j]);
    }
    for s in 1..=full {
        for j in (0..k).filter(|&j| s & (1 << j) == 0) {
            let mut best = f64::INFINITY;
            let mut bits = s;
            while bits != 0 {
                let l = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let v = d(j, l) + rest[(s & !(1 << l)) * k + l];
                if v < best {
                    best = v;
                }
            }
            rest[s * k + j] = best;
        }
    }

    let start = |j: usize| inst.depot_dist(stops[j]) + rest[(full & !(1 << j)) * k + j];
    let optimum = (0..k).map(start).fold(f64::INFINITY, f64::min);
    let tol = |v: f64| 1e-9 * v.abs().max(1.0);

    let mut route = Vec::with_capacity(k);
    let mut cur = (0..k)
        .find(|&j| start(j) <= optimum + tol(optimum))
        .expect("some start attains the minimum");
    let mut remaining = full & !(1 << cur);
    route.push(stops[cur]);
    while remaining != 0 {
        let target = rest[remaining * k + cur];
        let next = (0..k)
            .filter(|&l| remaining & (1 << l) != 0)
            .find(|&l| d(cur, l) + rest[(remaining & !(1 << l)) * k + l] <= target + tol(target))
            .expect("some continuation attains the minimum");
        route.push(stops[next]);
        remaining &= !(1 << next);
        cur = next;
    }
    Ok(route)
}

/// Globally optimal solution.
///
/// Open sets are enumerated in ascending bitmask order (bit `i` = location
/// `i`); a set is skipped when its facility plus assignment cost already
/// reaches the incumbent total. Only strict improvements replace the
/// incumbent, so the smallest optimal bitmask wins ties.
pub fn solve_exact(inst: &Instance) -> Result<Solution> {
    let n = inst.n();
    if n > MAX_EXACT_LOCATIONS {
        return Err(Error::TooLarge {
            what: "locations",
            value: n,
            limit: MAX_EXACT_LOCATIONS,
        });
    }
    let cover_masks: Vec<u32> = (0..n)
        .map(|j| (0..n).filter(|&i| inst.covers(i, j)).fold(0, |m, i| m | 1 << i))
        .collect();

    let mut incumbent: Option<(u32, Vec<usize>, Vec<usize>, f64)> = None;
    for mask in 1u32..(1u32 << n) {
        if cover_masks.iter().any(|&cm| cm & mask == 0) {
            continue;
        }
        let bound = incumbent.as_ref().map_or(f64::INFINITY, |b| b.3);
        let facility: f64 = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| inst.fixed_cost(i))
            .sum();
        if facility >= bound {
            continue;
        }
        let assignment: Vec<usize> = (0..n)
            .map(|j| {
                if mask & (1 << j) != 0 {
                    j
                } else {
                    cheapest_cover(inst, j, |i| mask & (1 << i) != 0)
                        .expect("covering mask serves every location")
                }
            })
            .collect();
        let assign_cost: f64 = assignment
            .iter()
            .enumerate()
            .map(|(j, &i)| inst.assign_cost(i, j))
            .sum();
        if facility + assign_cost >= bound {
            continue;
        }
        let stops: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let route = held_karp(inst, &stops)?;
        let total = facility + assign_cost + route_cost(inst, &route);
        if total < bound {
            incumbent = Some((mask, assignment, route, total));
        }
    }
    let (mask, assignment, route, _) =
        incumbent.expect("opening every facility is always feasible");
    let open = (0..n).map(|i| mask & (1 << i) != 0).collect();
    Solution::new(inst, open, assignment, route)
}

/// An instance paired with its optimal solution and the 0/1 learning targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub instance: Instance,
    pub optimal: Solution,
    /// Open indicator of the optimum as probabilities in {0, 1}.
    pub g_star: Vec<f64>,
    /// Arc indicator of the optimal route.
    pub pz_star: ArcMatrix,
}

impl LabeledInstance {
    /// Wraps a solution, re-checking feasibility and recomputing its cost.
    pub fn new(instance: Instance, optimal: Solution) -> Result<Self> {
        let cost = feasibility::objective(&instance, &optimal)?;
        let optimal = Solution { cost, ..optimal };
        let g_star = optimal.open.iter().map(|&o| f64::from(u8::from(o))).collect();
        let pz_star = optimal.arcs();
        Ok(LabeledInstance {
            instance,
            optimal,
            g_star,
            pz_star,
        })
    }
}

pub fn label_instance(inst: &Instance) -> Result<LabeledInstance> {
    let sol = solve_exact(inst)?;
    LabeledInstance::new(inst.clone(), sol)
}

/// Solves every instance, preserving input order regardless of scheduling.
/// Failures are reported in place so the remaining instances still complete.
pub fn label_dataset(instances: &[Instance], parallelism: usize) -> Vec<Result<LabeledInstance>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build();
    match pool {
        Ok(pool) => pool.install(|| instances.par_iter().map(label_instance).collect()),
        Err(_) => instances.iter().map(label_instance).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{check_route, check_scp};
    use crate::instance::fixtures::e3;
    use crate::instance::{generate_instance, generate_node_set, CostConfig, NodeSet};
    use proptest::prelude::*;

    /// Every permutation of `items`, lexicographic.
    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for (idx, &first) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(idx);
            for mut tail in permutations(&rest) {
                tail.insert(0, first);
                out.push(tail);
            }
        }
        out
    }

    fn brute_route_length(inst: &Instance, stops: &[usize]) -> f64 {
        permutations(stops)
            .iter()
            .map(|r| feasibility::route_length(inst, r))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn all_open_self_assigns() {
        assert_eq!(assign_optimal(&e3(), &[true; 3]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn e3_assignment() {
        assert_eq!(assign_optimal(&e3(), &[true, false, true]).unwrap(), vec![0, 0, 2]);
    }

    #[test]
    fn e3_uncovered() {
        match assign_optimal(&e3(), &[false, false, true]) {
            Err(Error::Uncovered(j)) => assert!(j == 0 || j == 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_stop_route() {
        let inst = e3();
        let (route, cost) = tsp_optimal(&inst, &[false, true, false]).unwrap();
        assert_eq!(route, vec![1]);
        assert_eq!(cost, 2.0 * inst.depot_dist(1));
    }

    #[test]
    fn e3_route_prefers_lexicographic_order() {
        let (route, cost) = tsp_optimal(&e3(), &[true, false, true]).unwrap();
        assert_eq!(route, vec![0, 2]);
        assert!((cost - 20.0).abs() < 1e-9);
    }

    #[test]
    fn empty_open_set_rejected() {
        assert!(tsp_optimal(&e3(), &[false; 3]).is_err());
    }

    #[test]
    fn e3_optimum() {
        let sol = solve_exact(&e3()).unwrap();
        assert_eq!(sol.open, vec![true, false, true]);
        assert_eq!(sol.assignment, vec![0, 0, 2]);
        assert_eq!(sol.route, vec![0, 2]);
        assert!((sol.cost.total - 41.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_cheap_facility_opens_alone() {
        let nodes = generate_node_set(11, 6, 15.0).unwrap();
        let fixed = vec![100.0, 100.0, 1.0, 100.0, 100.0, 100.0];
        let inst = Instance::from_node_set(&nodes, fixed, &[1e-3; 6], 1e-3, 1e6).unwrap();
        let sol = solve_exact(&inst).unwrap();
        assert_eq!(sol.open, vec![false, false, true, false, false, false]);
        assert!(sol.assignment.iter().all(|&i| i == 2));
    }

    #[test]
    fn too_many_locations_rejected() {
        let nodes = generate_node_set(1, 21, 15.0).unwrap();
        let inst = generate_instance(&nodes, 1, &CostConfig::default()).unwrap();
        assert!(matches!(solve_exact(&inst), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn held_karp_matches_permutations_up_to_seven() {
        for seed in 0..40u64 {
            let nodes = generate_node_set(seed, 7, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let k = 1 + (seed as usize % 7);
            let open: Vec<bool> = (0..7).map(|i| i < k).collect();
            let stops: Vec<usize> = (0..k).collect();
            let (route, _) = tsp_optimal(&inst, &open).unwrap();
            let hk = feasibility::route_length(&inst, &route);
            assert!((hk - brute_route_length(&inst, &stops)).abs() <= 1e-9);
        }
    }

    #[test]
    fn label_e3() {
        let out = label_dataset(&[e3()], 2);
        let lab = out[0].as_ref().unwrap();
        assert_eq!(lab.g_star, vec![1.0, 0.0, 1.0]);
        assert_eq!(lab.pz_star.from_depot(0), 1.0);
        assert_eq!(lab.pz_star.between(0, 2), 1.0);
        assert_eq!(lab.pz_star.to_terminal(2), 1.0);
        assert_eq!(lab.pz_star.values().iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn label_empty_and_parallel_determinism() {
        assert!(label_dataset(&[], 4).is_empty());
        let insts: Vec<Instance> = (0..12)
            .map(|s| {
                let nodes = generate_node_set(s, 7, 15.0).unwrap();
                generate_instance(&nodes, s + 100, &CostConfig::default()).unwrap()
            })
            .collect();
        let a: Vec<_> = label_dataset(&insts, 1).into_iter().map(Result::unwrap).collect();
        let b: Vec<_> = label_dataset(&insts, 8).into_iter().map(Result::unwrap).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn failures_reported_in_place() {
        let big = {
            let nodes = generate_node_set(1, 21, 15.0).unwrap();
            generate_instance(&nodes, 1, &CostConfig::default()).unwrap()
        };
        let out = label_dataset(&[e3(), big, e3()], 2);
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn optimum_is_feasible(seed in any::<u64>(), n in 1usize..9) {
            let nodes = generate_node_set(seed, n, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed.rotate_left(7), &CostConfig::default()).unwrap();
            let sol = solve_exact(&inst).unwrap();
            prop_assert!(check_scp(&inst, &sol.open, &sol.assignment).unwrap().is_empty());
            prop_assert!(check_route(&inst, &sol.open, &sol.route).unwrap().is_empty());
        }

        #[test]
        fn larger_radius_never_hurts(seed in any::<u64>(), r in 1.0f64..8.0, extra in 0.0f64..6.0) {
            let nodes = generate_node_set(seed, 7, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let small = solve_exact(&inst.with_coverage(r).unwrap()).unwrap();
            let large = solve_exact(&inst.with_coverage(r + extra).unwrap()).unwrap();
            prop_assert!(large.cost.total <= small.cost.total + 1e-9);
        }

        #[test]
        fn argmin_invariant_under_cost_scaling(seed in any::<u64>(), factor in 0.1f64..10.0) {
            let nodes = generate_node_set(seed, 6, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let a = solve_exact(&inst).unwrap();
            let b = solve_exact(&inst.scale_costs(factor).unwrap()).unwrap();
            // Different argmins are only acceptable as exact ties.
            let b_on_a = feasibility::objective(&inst, &Solution { cost: a.cost, ..b.clone() }).unwrap();
            prop_assert!((b_on_a.total - a.cost.total).abs() <= 1e-9 * a.cost.total.max(1.0));
            prop_assert!((b.cost.total - factor * a.cost.total).abs() <= 1e-9 * b.cost.total.max(1.0));
        }

        #[test]
        fn reversed_optimal_route_same_cost(seed in any::<u64>()) {
            let nodes = generate_node_set(seed, 8, 15.0).unwrap();
            let inst = generate_instance(&nodes, seed, &CostConfig::default()).unwrap();
            let (mut route, cost) = tsp_optimal(&inst, &[true; 8]).unwrap();
            route.reverse();
            prop_assert!((route_cost(&inst, &route) - cost).abs() <= 1e-9);
        }
    }

    #[test]
    fn e3_all_open_route() {
        let nodes = NodeSet::new(3, vec![(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (10.0, 0.0)]).unwrap();
        let inst = Instance::from_node_set(&nodes, vec![10.0, 12.0, 8.0], &[1.0; 3], 1.0, 5.0).unwrap();
        let (route, cost) = tsp_optimal(&inst, &[true; 3]).unwrap();
        assert_eq!(route, vec![0, 2, 1]);
        assert!((cost - (4.0 + 6.0 + 45f64.sqrt() + 5.0)).abs() < 1e-9);
    }
}
