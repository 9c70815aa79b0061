//! Mini-batch training with model selection on validation pairwise accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::pairwise_accuracy;
use crate::model::{ComparisonModel, PairFeatures};

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 64,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight decay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-epoch record: mean train loss and validation pairwise accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Full training trace plus the index of the selected snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub diverged: bool,
}

/// Adam moments, kept as flat vectors in parameter order.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Trains a copy of `model` on the resolved pair sets and returns the
/// snapshot with the highest validation pairwise accuracy.
///
/// Single-threaded and deterministic: the epoch shuffle stream is seeded
/// from the config, and batch reductions run in a fixed order. On a
/// non-finite loss, training stops and the best snapshot so far is
/// returned with `diverged` set.
pub fn train(
    model: &ComparisonModel,
    train_pairs: &[PairFeatures<'_>],
    val_pairs: &[PairFeatures<'_>],
    cfg: &TrainConfig,
) -> Result<(ComparisonModel, TrainHistory)> {
    cfg.validate()?;
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::InvalidConfig(
            "train and validation pair sets must be non-empty".into(),
        ));
    }

    let mut current = model.clone();
    let mut best = model.clone();
    let mut history = TrainHistory {
        epochs: Vec::with_capacity(cfg.epochs),
        best_epoch: 0,
        best_val_accuracy: f64::NEG_INFINITY,
        diverged: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut adam = AdamState {
        m: vec![0.0; current.param_count()],
        v: vec![0.0; current.param_count()],
        step: 0,
    };

    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<PairFeatures<'_>> = chunk.iter().map(|&i| train_pairs[i]).collect();
            let (grads, loss) = current.backward(&batch)?;
            if !loss.is_finite() {
                history.diverged = true;
                break 'epochs;
            }
            loss_sum += loss;
            batches += 1;
            apply_update(&mut current, &grads, cfg, &mut adam)?;
        }
        let val_accuracy = evaluate_accuracy(&current, val_pairs)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            val_accuracy,
        });
        if val_accuracy > history.best_val_accuracy {
            history.best_val_accuracy = val_accuracy;
            history.best_epoch = epoch;
            best = current.clone();
        }
    }

    if history.best_val_accuracy == f64::NEG_INFINITY {
        // Diverged before completing a single epoch; fall back to the
        // initial parameters.
        history.best_val_accuracy = evaluate_accuracy(&best, val_pairs)?;
    }
    Ok((best, history))
}

/// Pairwise accuracy of the model against the pairs' probability targets.
pub fn evaluate_accuracy(model: &ComparisonModel, pairs: &[PairFeatures<'_>]) -> Result<f64> {
    let mut preds = Vec::with_capacity(pairs.len());
    let mut targets = Vec::with_capacity(pairs.len());
    for pair in pairs {
        preds.push(model.forward(pair.left, pair.right)?);
        targets.push(if pair.target > 0.5 { 1u8 } else { 0u8 });
    }
    pairwise_accuracy(&preds, &targets)
}

fn apply_update(
    model: &mut ComparisonModel,
    grads: &crate::model::Gradients,
    cfg: &TrainConfig,
    adam: &mut AdamState,
) -> Result<()> {
    let mut params = model.params_flat();
    let mut grad = grads.to_flat();
    let trainable = trainable_len(model);
    if cfg.weight_decay > 0.0 {
        for k in 0..trainable {
            grad[k] += cfg.weight_decay * params[k];
        }
    }
    match cfg.optimizer {
        OptimizerKind::Sgd => {
            for k in 0..trainable {
                params[k] -= cfg.learning_rate * grad[k];
            }
        }
        OptimizerKind::Adam => {
            adam.step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(adam.step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(adam.step as i32);
            for k in 0..trainable {
                adam.m[k] = ADAM_BETA1 * adam.m[k] + (1.0 - ADAM_BETA1) * grad[k];
                adam.v[k] = ADAM_BETA2 * adam.v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                let m_hat = adam.m[k] / bc1;
                let v_hat = adam.v[k] / bc2;
                params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
    model.set_params_flat(&params)
}

/// The baseline head is fixed to the identity and excluded from updates.
fn trainable_len(model: &ComparisonModel) -> usize {
    match model.variant {
        crate::model::Variant::Baseline => model.param_count() - model.head.w.len() - 1,
        crate::model::Variant::NHidden => model.param_count(),
    }
}
