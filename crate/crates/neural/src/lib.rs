//! Dual-head transformer for decentralized path finding.
//!
//! One shared encoder reads a 256-token observation plus a polar spatial
//! encoding. The fast head emits the ego agent's next action; the slow head
//! predicts every token of the next observation. Everything runs in `f64`
//! with hand-written backpropagation so gradients can be checked against
//! finite differences.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod example;
pub mod gradcheck;
pub mod io;
pub mod loss;
pub mod model;
pub mod params;
pub mod sre;
pub mod train;

pub use config::ModelConfig;
pub use diagnostics::{sre_similarity_report, SimilarityReport};
pub use error::{NeuralError, Result};
pub use example::{position_weight, Example};
pub use gradcheck::{grad_check, grad_check_against, GradCheckOptions, GradCheckReport};
pub use io::{load_params, load_params_expecting, save_params};
pub use loss::{evaluate, fast_loss, loss_and_grad, slow_loss, total_loss, LossBreakdown};
pub use model::{forward, forward_action, ModelOutput};
pub use params::ModelParams;
pub use sre::{polar, sre_encode};
pub use train::{train, train_from, train_with_callback, LogEntry, TrainOptions, TrainingLog};
