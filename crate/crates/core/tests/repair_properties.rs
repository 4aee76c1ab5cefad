mod support;

use covertour::repair::{default_grid, verify};
use covertour::{check_route, check_scp, repair_full, repair_scp, sweep_alpha, ArcMatrix, Instance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::random_instance;

fn probability() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(0.5), 0.0..=1.0f64]
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![(1..=9u32).prop_map(|k| f64::from(k) / 10.0), 0.01..0.99f64]
}

fn case() -> impl Strategy<Value = (Instance, Vec<f64>, Vec<f64>, f64)> {
    (3usize..=10, any::<u64>()).prop_flat_map(|(n, seed)| {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n);
        (
            Just(inst),
            prop::collection::vec(probability(), n),
            prop::collection::vec(probability(), (n + 1) * (n + 1)),
            alpha(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn repaired_solutions_are_feasible((inst, g, pz, a) in case()) {
        let n = inst.n();
        let (open, assignment) = repair_scp(&inst, &g, a).unwrap();
        prop_assert!(check_scp(&inst, &open, &assignment).unwrap().is_empty());
        for i in 0..n {
            if g[i] >= a {
                prop_assert!(open[i]);
            }
        }

        let arcs = ArcMatrix::from_values(n, pz).unwrap();
        let provider = |_: &Instance, _: &[bool]| Ok(arcs.clone());
        let sol = repair_full(&inst, &g, &provider, a).unwrap();
        prop_assert!(check_route(&inst, &sol.open, &sol.route).unwrap().is_empty());
        prop_assert!(verify(&inst, &sol).is_ok());
    }

    #[test]
    fn sweep_minimum_dominates_every_grid_value((inst, g, pz, _a) in case()) {
        let arcs = ArcMatrix::from_values(inst.n(), pz).unwrap();
        let provider = |_: &Instance, _: &[bool]| Ok(arcs.clone());
        let sweep = sweep_alpha(&inst, &g, &provider, &default_grid()).unwrap();
        let best = sweep.best().cost.total;
        for (a, sol) in &sweep.per_alpha {
            prop_assert!(best <= sol.cost.total + 1e-9);
            prop_assert_eq!(sweep.best_alphas.contains(a), sol.cost.total <= best + 1e-9 * best.max(1.0));
        }
        prop_assert_eq!(sweep.alpha_star, sweep.best_alphas[0]);
    }
}
