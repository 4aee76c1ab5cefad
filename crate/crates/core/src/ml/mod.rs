//! Feedforward predictors for open facilities and route arcs.

mod features;
mod mlp;
mod train;

pub use features::{encode_scp, encode_scp_batch, encode_tsp, FeatureLayout, FeatureVector, ModelKind};
pub use mlp::{loss, loss_and_gradient, Dense, Gradients, MlpModel};
pub use train::{split_indices, train, EpochRecord, Example, TrainConfig, TrainHistory};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::ArcMatrix;

/// Open-facility probabilities for every location.
pub fn predict_scp(model: &MlpModel, inst: &Instance) -> Result<Vec<f64>> {
    let x = encode_scp(inst);
    let out = model.forward(&x.values)?;
    if out.len() != inst.n() {
        return Err(Error::dim("facility model output", inst.n(), out.len()));
    }
    Ok(out)
}

/// Arc probabilities for routing the given open set.
pub fn predict_tsp(model: &MlpModel, inst: &Instance, open: &[bool]) -> Result<ArcMatrix> {
    let x = encode_tsp(inst, open)?;
    let out = model.forward(&x.values)?;
    ArcMatrix::from_values(inst.n(), out)
}

/// Both predictor outputs for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbOutputs {
    pub g_y: Vec<f64>,
    pub p_z: ArcMatrix,
}
