//! Mini-batch Adam training.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::error::{NeuralError, Result};
use crate::example::Example;
use crate::loss::{loss_and_grad, LossBreakdown};
use crate::params::ModelParams;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub steps: usize,
    /// Rescale the gradient when its global norm exceeds this value.
    pub clip_norm: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { steps: 1000, clip_norm: Some(1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub step: u64,
    pub fast_loss: f64,
    pub slow_loss: f64,
    pub total_loss: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub entries: Vec<LogEntry>,
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,fast_loss,slow_loss,total_loss,wall_ms")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{},{}", e.step, e.fast_loss, e.slow_loss, e.total_loss, e.wall_ms)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn last(&self) -> Option<&LogEntry> {
        self.entries.last()
    }
}

/// Adam with linear warmup.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    warmup: usize,
}

impl Adam {
    pub fn new(n: usize, lr: f64, warmup: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr, warmup }
    }

    pub fn current_lr(&self) -> f64 {
        if self.warmup == 0 {
            self.lr
        } else {
            self.lr * ((self.t + 1) as f64 / self.warmup as f64).min(1.0)
        }
    }

    pub fn step(&mut self, w: &mut [f64], g: &[f64]) {
        let lr = self.current_lr();
        self.t += 1;
        if lr == 0.0 {
            return;
        }
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((w, &g), (m, v)) in w.iter_mut().zip(g).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
        }
    }
}

/// Trains freshly initialized parameters.
pub fn train(dataset: &[Example], config: &ModelConfig, opts: &TrainOptions) -> Result<(ModelParams, TrainingLog)> {
    let params = ModelParams::init(config)?;
    train_from(params, dataset, opts)
}

/// Continues training `params`. The step counter carries over; optimizer
/// moments start from zero. Batches are drawn from per-epoch shuffles seeded
/// by the config seed and the starting step, so a run is reproducible.
pub fn train_from(mut params: ModelParams, dataset: &[Example], opts: &TrainOptions) -> Result<(ModelParams, TrainingLog)> {
    let log = train_with_callback(&mut params, dataset, opts, |_| {})?;
    Ok((params, log))
}

/// Trains in place, calling `on_step` after every optimizer step.
pub fn train_with_callback(
    params: &mut ModelParams,
    dataset: &[Example],
    opts: &TrainOptions,
    mut on_step: impl FnMut(&LogEntry),
) -> Result<TrainingLog> {
    if dataset.is_empty() {
        return Err(NeuralError::DatasetEmpty);
    }
    let cfg = params.config.clone();
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ params.trained_steps.rotate_left(32));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cursor = order.len();
    let mut adam = Adam::new(params.n_params(), cfg.learning_rate, cfg.warmup_steps);
    let start = Instant::now();
    let mut log = TrainingLog::default();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for _ in 0..opts.steps {
        batch.clear();
        while batch.len() < cfg.batch_size.min(dataset.len()) {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(dataset[order[cursor]].clone());
            cursor += 1;
        }
        let (loss, mut grads) = loss_and_grad(params, &batch)?;
        if !loss.total.is_finite() {
            return Err(NeuralError::DivergenceDetected { step: params.trained_steps as usize });
        }
        if let Some(max) = opts.clip_norm {
            let norm = grads.data.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max {
                let s = max / norm;
                grads.data.iter_mut().for_each(|g| *g *= s);
            }
        }
        adam.step(&mut params.weights.data, &grads.data);
        if !params.is_finite() {
            return Err(NeuralError::DivergenceDetected { step: params.trained_steps as usize });
        }
        params.trained_steps += 1;
        let entry = entry(params.trained_steps, loss, start);
        on_step(&entry);
        log.entries.push(entry);
    }
    Ok(log)
}

fn entry(step: u64, l: LossBreakdown, start: Instant) -> LogEntry {
    LogEntry {
        step,
        fast_loss: l.fast,
        slow_loss: l.slow,
        total_loss: l.total,
        wall_ms: start.elapsed().as_millis() as u64,
    }
}
