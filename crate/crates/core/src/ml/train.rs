//! Minibatch training with adaptive moment estimates and a validation-driven
//! architecture tuning loop.
//!
//! Each tuning round trains a freshly initialised network for a fixed number
//! of epochs and keeps the epoch with the lowest validation loss. Between
//! rounds the architecture is adjusted: an overfit round (validation loss
//! more than `overfit_ratio` times the training loss) gets more dropout and
//! narrower layers; an underfit round (both losses above `underfit_fraction`
//! of the base-rate loss) gets wider or deeper layers. Tuning stops when the
//! best validation loss improves by less than `min_improvement` over a round,
//! when neither rule fires, or after `tuning_rounds`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{loss, loss_and_gradient, Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub minibatch_size: usize,
    pub step_size: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub tuning_rounds: usize,
    /// Starting hidden widths.
    pub hidden: Vec<usize>,
    /// Starting dropout rate for every hidden layer.
    pub dropout: f64,
    pub overfit_ratio: f64,
    pub underfit_fraction: f64,
    pub min_improvement: f64,
    pub max_hidden_layers: usize,
    pub max_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            minibatch_size: 32,
            step_size: 1e-3,
            validation_fraction: 0.10,
            seed: 0,
            tuning_rounds: 4,
            hidden: vec![64, 64],
            dropout: 0.0,
            overfit_ratio: 1.2,
            underfit_fraction: 0.5,
            min_improvement: 0.01,
            max_hidden_layers: 4,
            max_width: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.tuning_rounds == 0 {
            return bad("epochs, minibatch size and tuning rounds must be positive");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step size must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub round: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub train_size: usize,
    pub validation_size: usize,
    /// Round whose model was returned.
    pub selected_round: usize,
}

impl TrainHistory {
    pub fn first(&self) -> Option<&EpochRecord> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn best_validation(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.validation_loss)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Seeded shuffle into `(training, validation)` index sets; the validation
/// set has `round(len * fraction)` elements, at least one.
pub fn split_indices(len: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((len as f64 * fraction).round() as usize).clamp(1, len.saturating_sub(1));
    let train = idx.split_off(n_val);
    (train, idx)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mut k = 0;
        for (l, layer) in model.layers_mut().iter_mut().enumerate() {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let gs = grads.weights[l].iter().chain(&grads.bias[l]);
            for (p, &g) in params.zip(gs) {
                self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * g;
                self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * g * g;
                *p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
                k += 1;
            }
        }
    }
}

fn pairs<'a>(data: &'a [Example], idx: &[usize]) -> Vec<(&'a [f64], &'a [f64])> {
    idx.iter()
        .map(|&i| (data[i].features.as_slice(), data[i].target.as_slice()))
        .collect()
}

/// Loss of predicting the per-output mean target everywhere.
fn base_rate_loss(batch: &[(&[f64], &[f64])]) -> f64 {
    let outputs = batch[0].1.len();
    let mut mean = vec![0.0; outputs];
    for (_, t) in batch {
        for (m, v) in mean.iter_mut().zip(*t) {
            *m += v / batch.len() as f64;
        }
    }
    let entropy = |p: f64| {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
        }
    };
    mean.iter().map(|&p| entropy(p)).sum::<f64>() / outputs as f64
}

struct Architecture {
    hidden: Vec<usize>,
    dropout: f64,
}

pub fn train(data: &[Example], cfg: &TrainConfig) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if data.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 10 examples, got {}",
            data.len()
        )));
    }
    let in_dim = data[0].features.len();
    let out_dim = data[0].target.len();
    for ex in data {
        if ex.features.len() != in_dim {
            return Err(Error::dim("features", in_dim, ex.features.len()));
        }
        if ex.target.len() != out_dim {
            return Err(Error::dim("target", out_dim, ex.target.len()));
        }
    }

    let (train_idx, val_idx) = split_indices(data.len(), cfg.validation_fraction, cfg.seed);
    let train_set = pairs(data, &train_idx);
    let val_set = pairs(data, &val_idx);
    let baseline = base_rate_loss(&train_set);

    let mut history = TrainHistory {
        train_size: train_set.len(),
        validation_size: val_set.len(),
        ..TrainHistory::default()
    };
    let mut arch = Architecture {
        hidden: cfg.hidden.clone(),
        dropout: cfg.dropout,
    };
    let mut best: Option<(MlpModel, f64)> = None;

    for round in 0..cfg.tuning_rounds {
        let round_seed = cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(round as u64 + 1));
        let outcome =
            train_round(&train_set, &val_set, in_dim, out_dim, &arch, cfg, round, round_seed, &mut history)?;

        let previous = best.as_ref().map(|b| b.1);
        if previous.is_none_or(|p| outcome.best_validation < p) {
            best = Some((outcome.model, outcome.best_validation));
            history.selected_round = round;
        }
        if let Some(p) = previous {
            let gain = (p - outcome.best_validation) / p;
            if gain < cfg.min_improvement {
                break;
            }
        }

        // Diagnose the architecture from where the round ended, not its best epoch.
        let (train_loss, val_loss) = (outcome.final_train, outcome.final_validation);
        if val_loss > cfg.overfit_ratio * train_loss {
            arch.dropout = (arch.dropout + 0.1).min(0.5);
            for w in &mut arch.hidden {
                *w = (*w * 3 / 4).max(4);
            }
            if arch.hidden.len() > 1 && arch.dropout >= 0.5 {
                arch.hidden.pop();
            }
        } else if train_loss > cfg.underfit_fraction * baseline
            && val_loss > cfg.underfit_fraction * baseline
        {
            if arch.hidden.iter().all(|&w| w >= cfg.max_width) {
                if arch.hidden.len() >= cfg.max_hidden_layers {
                    break;
                }
                arch.hidden.push(*arch.hidden.last().unwrap_or(&64));
            } else {
                for w in &mut arch.hidden {
                    *w = (*w * 3 / 2).min(cfg.max_width);
                }
            }
        } else {
            break;
        }
    }
    let (model, _) = best.expect("at least one round runs");
    Ok((model, history))
}

struct RoundOutcome {
    /// Snapshot at the epoch with the lowest validation loss.
    model: MlpModel,
    best_validation: f64,
    final_train: f64,
    final_validation: f64,
}

#[allow(clippy::too_many_arguments)]
fn train_round(
    train_set: &[(&[f64], &[f64])],
    val_set: &[(&[f64], &[f64])],
    in_dim: usize,
    out_dim: usize,
    arch: &Architecture,
    cfg: &TrainConfig,
    round: usize,
    seed: u64,
    history: &mut TrainHistory,
) -> Result<RoundOutcome> {
    let dims: Vec<usize> = std::iter::once(in_dim)
        .chain(arch.hidden.iter().copied())
        .chain(std::iter::once(out_dim))
        .collect();
    let mut model = MlpModel::new(&dims, vec![arch.dropout; arch.hidden.len()], seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    let mut adam = Adam::new(model.parameter_count());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best = (model.clone(), f64::INFINITY);
    let mut last = (f64::INFINITY, f64::INFINITY);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| train_set[i]).collect();
            let (l, grads) = loss_and_gradient(&model, &batch, Some(&mut rng))?;
            if !l.is_finite() {
                return Err(Error::NonFiniteLoss(format!(
                    "round {round} epoch {epoch}: minibatch loss {l}"
                )));
            }
            adam.step(&mut model, &grads, cfg.step_size);
        }
        let train_loss = loss(&model, train_set)?;
        let val_loss = loss(&model, val_set)?;
        if !(train_loss.is_finite() && val_loss.is_finite()) {
            return Err(Error::NonFiniteLoss(format!(
                "round {round} epoch {epoch}: train {train_loss}, validation {val_loss}"
            )));
        }
        history.epochs.push(EpochRecord {
            round,
            epoch,
            train_loss,
            validation_loss: val_loss,
            hidden: arch.hidden.clone(),
            dropout: arch.dropout,
        });
        if val_loss < best.1 {
            best = (model.clone(), val_loss);
        }
        last = (train_loss, val_loss);
    }
    Ok(RoundOutcome {
        model: best.0,
        best_validation: best.1,
        final_train: last.0,
        final_validation: last.1,
    })
}
