mod support;

use covertour::ml::{loss_and_gradient, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{finite_difference_gradient, relative_error};

const EPS: f64 = 1e-5;

struct Case {
    model: MlpModel,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

fn random_case(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Case {
    let mut dims = vec![input];
    for _ in 0..rng.gen_range(1..=2) {
        dims.push(rng.gen_range(4..=16));
    }
    dims.push(output);
    let model = MlpModel::new(&dims, vec![0.0; dims.len() - 2], rng.gen()).unwrap();
    let batch = rng.gen_range(1..=4);
    let inputs = (0..batch)
        .map(|_| (0..input).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let targets = (0..batch)
        .map(|_| (0..output).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect())
        .collect();
    Case { model, inputs, targets }
}

fn worst_error(case: &Case) -> f64 {
    let batch: Vec<(&[f64], &[f64])> = case
        .inputs
        .iter()
        .zip(&case.targets)
        .map(|(x, t)| (x.as_slice(), t.as_slice()))
        .collect();
    let analytic = loss_and_gradient(&case.model, &batch, None).unwrap().1.flatten();
    let numeric = finite_difference_gradient(&case.model, &batch, EPS);
    analytic
        .iter()
        .zip(&numeric)
        .filter(|(g, _)| g.abs() >= 1e-8)
        .map(|(&g, &n)| relative_error(g, n))
        .fold(0.0, f64::max)
}

fn check(input: usize, output: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let case = random_case(input, output, &mut rng);
        let worst = worst_error(&case);
        assert!(worst < 1e-5, "trial {trial} {:?}: relative error {worst:.3e}", case.model.layer_dims());
    }
}

#[test]
fn facility_model_gradient_matches_finite_differences() {
    check(333, 10, 11);
}

#[test]
fn routing_model_gradient_matches_finite_differences() {
    check(343, 121, 12);
}

#[test]
fn dropout_free_gradient_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let case = random_case(20, 5, &mut rng);
    assert_eq!(worst_error(&case), worst_error(&case));
}
