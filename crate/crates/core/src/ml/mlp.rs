//! Fully connected network: rectifier hidden layers, logistic outputs,
//! inverted dropout on hidden activations during training.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textfmt::{Reader, Writer};

const CHECKPOINT_MAGIC: &str = "covertour-mlp";

/// Affine layer with row-major `outputs × inputs` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, &b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    /// One rate per hidden layer.
    dropout: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `t`, computed from the logit.
fn bce_with_logit(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

impl MlpModel {
    /// He-uniform hidden layers and Glorot-uniform output layer, zero biases.
    pub fn new(dims: &[usize], dropout: Vec<f64>, seed: u64) -> Result<Self> {
        let mut model = MlpModel::zeros(dims, dropout)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = model.layers.len() - 1;
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let limit = if l == last {
                (6.0 / (layer.inputs + layer.outputs) as f64).sqrt()
            } else {
                (6.0 / layer.inputs as f64).sqrt()
            };
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn zeros(dims: &[usize], dropout: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer dimensions must list at least input and output, all positive: {dims:?}"
            )));
        }
        if dropout.len() != dims.len() - 2 {
            return Err(Error::dim("dropout rates", dims.len() - 2, dropout.len()));
        }
        if let Some(r) = dropout.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {r} outside [0, 1)"
            )));
        }
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(MlpModel { layers, dropout })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dropout(&self) -> &[f64] {
        &self.dropout
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::dim("parameters", self.parameter_count(), values.len()));
        }
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("model input", self.input_dim(), x.len()));
        }
        Ok(())
    }

    /// Inference: dropout is the identity.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let trace = self.trace(x, None);
        Ok(trace
            .logits
            .iter()
            .map(|&z| sigmoid(z).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
            .collect())
    }

    /// Training-mode forward pass; kept hidden units are scaled by `1 / (1 - rate)`.
    pub fn forward_train(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x, Some(rng)).logits.iter().map(|&z| sigmoid(z)).collect())
    }

    fn trace(&self, x: &[f64], mut rng: Option<&mut ChaCha8Rng>) -> Trace {
        let hidden = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(hidden + 1);
        let mut pre = Vec::with_capacity(hidden);
        let mut masks = Vec::with_capacity(hidden);
        acts.push(x.to_vec());
        let mut z = Vec::new();
        for (l, layer) in self.layers[..hidden].iter().enumerate() {
            layer.apply(&acts[l], &mut z);
            let rate = self.dropout[l];
            let mask: Vec<f64> = match rng.as_deref_mut() {
                Some(r) if rate > 0.0 => {
                    let keep = 1.0 - rate;
                    (0..z.len())
                        .map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect()
                }
                _ => vec![1.0; z.len()],
            };
            let a = z.iter().zip(&mask).map(|(&v, &m)| v.max(0.0) * m).collect();
            pre.push(z.clone());
            masks.push(mask);
            acts.push(a);
        }
        let mut logits = Vec::new();
        self.layers[hidden].apply(&acts[hidden], &mut logits);
        Trace {
            acts,
            pre,
            masks,
            logits,
        }
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::new(CHECKPOINT_MAGIC, 1);
        w.line("dims", self.layer_dims());
        w.scalar("hidden", "relu");
        w.scalar("output", "logistic");
        w.line("dropout", &self.dropout);
        for (l, layer) in self.layers.iter().enumerate() {
            w.matrix(&format!("w{l}"), layer.inputs, &layer.weights);
            w.line(&format!("b{l}"), &layer.bias);
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text, CHECKPOINT_MAGIC, 1)?;
        let dims: Vec<usize> = r.vector("dims")?;
        for (key, expected) in [("hidden", "relu"), ("output", "logistic")] {
            let tag: String = r.scalar(key)?;
            if tag != expected {
                return Err(Error::InvalidArgument(format!(
                    "unsupported {key} activation `{tag}`"
                )));
            }
        }
        let dropout = r.vector("dropout")?;
        let mut model = MlpModel::zeros(&dims, dropout)?;
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let (rows, cols, weights) = r.matrix(&format!("w{l}"))?;
            if rows != layer.outputs || cols != layer.inputs {
                return Err(Error::dim(
                    format!("w{l}"),
                    layer.outputs * layer.inputs,
                    rows * cols,
                ));
            }
            let bias: Vec<f64> = r.vector(&format!("b{l}"))?;
            if bias.len() != layer.outputs {
                return Err(Error::dim(format!("b{l}"), layer.outputs, bias.len()));
            }
            if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!("layer {l} has non-finite parameters")));
            }
            layer.weights = weights;
            layer.bias = bias;
        }
        r.expect_end()?;
        Ok(model)
    }
}

struct Trace {
    /// Layer inputs: the network input, then each hidden activation after dropout.
    acts: Vec<Vec<f64>>,
    /// Hidden pre-activations.
    pre: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Same order as [`MlpModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

fn check_batch(model: &MlpModel, batch: &[(&[f64], &[f64])]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    for (x, t) in batch {
        model.check_input(x)?;
        if t.len() != model.output_dim() {
            return Err(Error::dim("target", model.output_dim(), t.len()));
        }
    }
    Ok(())
}

/// Mean elementwise binary cross-entropy in inference mode.
pub fn loss(model: &MlpModel, batch: &[(&[f64], &[f64])]) -> Result<f64> {
    check_batch(model, batch)?;
    let mut total = 0.0;
    for (x, t) in batch {
        let trace = model.trace(x, None);
        total += trace
            .logits
            .iter()
            .zip(*t)
            .map(|(&z, &y)| bce_with_logit(z, y))
            .sum::<f64>();
    }
    Ok(total / (batch.len() * model.output_dim()) as f64)
}

/// Mean elementwise binary cross-entropy and its exact gradient.
///
/// With `dropout_rng` the hidden layers sample dropout masks; without it the
/// pass is deterministic inference-mode.
pub fn loss_and_gradient(
    model: &MlpModel,
    batch: &[(&[f64], &[f64])],
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients)> {
    check_batch(model, batch)?;
    let scale = 1.0 / (batch.len() * model.output_dim()) as f64;
    let mut grads = Gradients::zeros_like(model);
    let mut total = 0.0;
    let hidden = model.layers.len() - 1;

    for (x, t) in batch {
        let trace = model.trace(x, dropout_rng.as_deref_mut());
        let mut delta: Vec<f64> = trace
            .logits
            .iter()
            .zip(*t)
            .map(|(&z, &y)| {
                total += bce_with_logit(z, y);
                (sigmoid(z) - y) * scale
            })
            .collect();

        for l in (0..=hidden).rev() {
            let layer = &model.layers[l];
            let input = &trace.acts[l];
            let gw = &mut grads.weights[l];
            for (o, &dz) in delta.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                grads.bias[l][o] += dz;
                for (g, &a) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                    *g += dz * a;
                }
            }
            if l == 0 {
                break;
            }
            // Back through the previous hidden layer's dropout and rectifier.
            let mut upstream = vec![0.0; layer.inputs];
            for (o, &dz) in delta.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (u, &w) in upstream.iter_mut().zip(row) {
                    *u += w * dz;
                }
            }
            let pre = &trace.pre[l - 1];
            let mask = &trace.masks[l - 1];
            delta = upstream
                .iter()
                .zip(pre)
                .zip(mask)
                .map(|((&u, &z), &m)| if z > 0.0 { u * m } else { 0.0 })
                .collect();
        }
    }
    Ok((total * scale, grads))
}
