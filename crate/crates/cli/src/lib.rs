//! Batch pipeline over on-disk datasets: `gen`, `label`, `train`, `eval`,
//! `sweep` and `report`. Every command is a deterministic function of its
//! inputs and seeds.

pub mod error;
pub mod evaluate;
pub mod pipeline;
pub mod report;

pub use error::{CliError, CliResult};
pub use evaluate::{cmd_eval, cmd_sweep, Predictor, RatioReport, SplitCosts, SweepReport};
pub use pipeline::{cmd_gen, cmd_label, cmd_train, SplitSpec, TrainOutputs};
pub use report::cmd_report;
