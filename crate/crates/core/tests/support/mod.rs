//! Independent reference implementations shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use covertour::ml::MlpModel;
use covertour::{generate_instance, generate_node_set, CostConfig, Instance};
use rand::Rng;

/// Random instance with a randomized coverage radius so that the covering
/// structure ranges from sparse to dense.
pub fn random_instance(rng: &mut impl Rng, n: usize) -> Instance {
    let nodes = generate_node_set(rng.gen(), n, 15.0).unwrap();
    let cfg = CostConfig {
        facility: (5.0, 60.0),
        assignment_slope: (0.5, 4.0),
        transport_per_km: (0.2, 3.0),
        coverage_km: rng.gen_range(2.5..12.0),
    };
    generate_instance(&nodes, rng.gen(), &cfg).unwrap()
}

/// Cheapest closed tour through `stops` by enumerating every ordering.
pub fn permutation_tour(inst: &Instance, stops: &[usize]) -> f64 {
    fn walk(inst: &Instance, stops: &[usize], used: &mut [bool], last: usize, len: f64, depth: usize, best: &mut f64) {
        if depth == stops.len() {
            *best = best.min(len + inst.depot_dist(last));
            return;
        }
        for k in 0..stops.len() {
            if !used[k] {
                used[k] = true;
                walk(inst, stops, used, stops[k], len + inst.dist(last, stops[k]), depth + 1, best);
                used[k] = false;
            }
        }
    }
    if stops.is_empty() {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; stops.len()];
    for k in 0..stops.len() {
        used[k] = true;
        walk(inst, stops, &mut used, stops[k], inst.depot_dist(stops[k]), 1, &mut best);
        used[k] = false;
    }
    best * inst.per_km()
}

/// Optimal total cost over every covering subset and every tour of it.
pub fn brute_force_total(inst: &Instance) -> f64 {
    let n = inst.n();
    let mut best = f64::INFINITY;
    'subsets: for mask in 1u32..(1 << n) {
        let open: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let mut assign = 0.0;
        for j in 0..n {
            let cheapest = open
                .iter()
                .filter(|&&i| inst.covers(i, j))
                .map(|&i| inst.assign_cost(i, j))
                .fold(f64::INFINITY, f64::min);
            if cheapest.is_infinite() {
                continue 'subsets;
            }
            assign += cheapest;
        }
        let facility: f64 = open.iter().map(|&i| inst.fixed_cost(i)).sum();
        best = best.min(facility + assign + permutation_tour(inst, &open));
    }
    best
}

/// Double-double value `hi + lo`.
#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        two_sum(s.hi, lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul_f(self, b: f64) -> Dd {
        let p = self.hi * b;
        let err = self.hi.mul_add(b, -p);
        two_sum(p, err + self.lo * b)
    }

    fn relu(self) -> Dd {
        if self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0) {
            self
        } else {
            Dd::default()
        }
    }
}

/// `softplus(a + delta) - softplus(a)` without cancellation.
fn softplus_step(a: f64, delta: f64) -> f64 {
    let sigma = 1.0 / (1.0 + (-a).exp());
    (sigma * delta.exp_m1()).ln_1p()
}

fn layer_dd(w: &[f64], b: &[f64], inputs: usize, x: &[Dd]) -> Vec<Dd> {
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &w[o * inputs..(o + 1) * inputs];
            row.iter().zip(x).fold(Dd::from(bias), |acc, (&wi, &xi)| acc.add(xi.mul_f(wi)))
        })
        .collect()
}

/// Forward pass in double-double from layer `from`, given that layer's input.
fn forward_from(model: &MlpModel, from: usize, input: Vec<Dd>) -> Vec<Dd> {
    let layers = model.layers();
    let mut a = input;
    for (l, layer) in layers.iter().enumerate().skip(from) {
        let z = layer_dd(&layer.weights, &layer.bias, layer.inputs, &a);
        a = if l + 1 == layers.len() { z } else { z.into_iter().map(Dd::relu).collect() };
    }
    a
}

/// Central finite-difference gradient of the mean binary cross-entropy with
/// step `eps`, in [`MlpModel::parameters`] order.
///
/// Each parameter moves by exactly `±eps`. Logits are carried in
/// double-double and every loss difference is formed directly, so the only
/// error left is the truncation error of the central difference.
pub fn finite_difference_gradient(model: &MlpModel, batch: &[(&[f64], &[f64])], eps: f64) -> Vec<f64> {
    let layers = model.layers();
    let scale = 1.0 / (batch.len() * model.output_dim()) as f64;
    let mut out = vec![0.0; model.parameter_count()];

    for (x, t) in batch {
        let mut acts = vec![x.iter().map(|&v| Dd::from(v)).collect::<Vec<_>>()];
        let mut pres = Vec::new();
        for (l, layer) in layers.iter().enumerate() {
            let z = layer_dd(&layer.weights, &layer.bias, layer.inputs, &acts[l]);
            if l + 1 < layers.len() {
                acts.push(z.iter().map(|v| v.relu()).collect());
            }
            pres.push(z);
        }

        let mut offset = 0;
        for (l, layer) in layers.iter().enumerate() {
            let last = l + 1 == layers.len();
            // Parameter k of this layer shifts pre-activation `o` by `eps * coeff`.
            let shifted = |o: usize, coeff: Dd, sign: f64| -> Vec<Dd> {
                let mut z = pres[l].clone();
                z[o] = z[o].add(coeff.mul_f(sign * eps));
                if last {
                    z
                } else {
                    forward_from(model, l + 1, z.into_iter().map(Dd::relu).collect())
                }
            };
            let params = layer.weights.len() + layer.bias.len();
            for k in 0..params {
                let (o, coeff) = if k < layer.weights.len() {
                    (k / layer.inputs, acts[l][k % layer.inputs])
                } else {
                    (k - layer.weights.len(), Dd::from(1.0))
                };
                let up = shifted(o, coeff, 1.0);
                let down = shifted(o, coeff, -1.0);
                let mut diff = 0.0;
                for ((zu, zd), &y) in up.iter().zip(&down).zip(*t) {
                    let delta = zu.sub(*zd).hi;
                    let a = zd.hi;
                    diff += (1.0 - y) * softplus_step(a, delta) + y * softplus_step(-a, -delta);
                }
                out[offset + k] += diff * scale / (2.0 * eps);
            }
            offset += params;
        }
    }
    out
}

/// Symmetric relative error used for gradient comparisons.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}
