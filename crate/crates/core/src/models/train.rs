use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Network, TrainingConfig};
use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::neural::{add_l2_grad, bce, bce_logit_grad, l2_penalty, AdamState, Differentiable, Mode};

/// One tokenized document and its target vector (length 1 or 6).
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub seq: TokenSequence,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Epoch 0 holds the losses of the untrained model.
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct Trained<N> {
    pub model: N,
    pub history: TrainingHistory,
}

fn check_targets<N: Network>(model: &N, examples: &[Example]) -> Result<()> {
    for (i, ex) in examples.iter().enumerate() {
        if ex.target.len() != model.outputs() {
            return Err(Error::shape(
                "targets",
                format!("example {i} has {} targets, model has {} outputs", ex.target.len(), model.outputs()),
            ));
        }
    }
    Ok(())
}

/// Mean BCE over `examples` in inference mode plus the L2 penalty.
pub fn dataset_loss<N: Network>(model: &N, examples: &[Example], l2: f64) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Data("loss over an empty example set".into()));
    }
    let mut total = 0.0;
    for ex in examples {
        total += bce(&model.predict(&ex.seq)?, &ex.target);
    }
    let loss = total / examples.len() as f64 + l2_penalty(model.params(), l2);
    if !loss.is_finite() {
        return Err(Error::NonFinite("dataset loss"));
    }
    Ok(loss)
}

/// Accumulates the batch gradient (examples processed in the given order),
/// adds the L2 term and applies one Adam update. Returns the batch loss
/// measured before the update.
pub fn train_batch<N: Network>(
    model: &mut N,
    adam: &mut AdamState,
    batch: &[&Example],
    l2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    model.zero_grad();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        let (p, cache) = model.forward(&ex.seq, Mode::Train, rng)?;
        total += bce(&p, &ex.target);
        let d: Vec<f64> = bce_logit_grad(&p, &ex.target).into_iter().map(|g| g * scale).collect();
        model.backward(&ex.seq, &cache, &d);
    }
    let loss = total * scale + l2_penalty(model.params(), l2);
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    add_l2_grad(model.params_mut(), l2);
    adam.step(&mut model.params_mut())?;
    Ok(loss)
}

/// Mini-batch Adam training with a seeded per-epoch shuffle. Keeps the
/// weights from the epoch with the lowest validation loss and stops after
/// `patience` epochs without improvement.
pub fn train<N: Network>(mut model: N, train: &[Example], val: &[Example], cfg: &TrainingConfig) -> Result<Trained<N>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("no training examples".into()));
    }
    check_targets(&model, train)?;
    check_targets(&model, val)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.adam());
    let val_loss = |m: &N| -> Result<Option<f64>> {
        if val.is_empty() {
            Ok(None)
        } else {
            dataset_loss(m, val, cfg.l2).map(Some)
        }
    };
    let mut history = TrainingHistory {
        epochs: vec![EpochRecord { epoch: 0, train_loss: dataset_loss(&model, train, cfg.l2)?, val_loss: val_loss(&model)? }],
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = model.clone();
    let mut best_val = history.epochs[0].val_loss;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            train_batch(&mut model, &mut adam, &batch, cfg.l2, &mut rng)?;
        }
        let record = EpochRecord { epoch, train_loss: dataset_loss(&model, train, cfg.l2)?, val_loss: val_loss(&model)? };
        log::info!(
            "epoch {epoch}: train loss {:.6}{}",
            record.train_loss,
            record.val_loss.map(|v| format!(", val loss {v:.6}")).unwrap_or_default()
        );
        let improved = match (record.val_loss, best_val) {
            (Some(v), Some(b)) => v < b,
            _ => true,
        };
        history.epochs.push(record);
        if improved {
            best_val = history.epochs[epoch].val_loss;
            best = model.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                history.stopped_early = true;
                log::info!("early stop after epoch {epoch}; best epoch {}", history.best_epoch);
                break;
            }
        }
    }
    Ok(Trained { model: best, history })
}

/// Full training objective (mean BCE plus L2) over a fixed example set,
/// exposed for finite-difference checks. The dropout mask is re-drawn from
/// `seed` on every evaluation so it is identical across perturbations.
#[derive(Debug, Clone)]
pub struct Objective<'a, N> {
    pub model: N,
    pub examples: &'a [Example],
    pub l2: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl<'a, N: Network> Objective<'a, N> {
    pub fn new(model: N, examples: &'a [Example], l2: f64) -> Self {
        Objective { model, examples, l2, mode: Mode::Inference, seed: 0 }
    }
}

impl<N: Network> Differentiable for Objective<'_, N> {
    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.model.params_mut().into_iter().filter(|p| p.trainable).map(|p| &mut p.value).collect()
    }

    fn loss_and_grad(&mut self) -> (f64, Vec<Array2<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.model.zero_grad();
        let scale = 1.0 / self.examples.len() as f64;
        let mut total = 0.0;
        for ex in self.examples {
            let (p, cache) = self.model.forward(&ex.seq, self.mode, &mut rng).expect("forward pass");
            total += bce(&p, &ex.target);
            let d: Vec<f64> = bce_logit_grad(&p, &ex.target).into_iter().map(|g| g * scale).collect();
            self.model.backward(&ex.seq, &cache, &d);
        }
        add_l2_grad(self.model.params_mut(), self.l2);
        let loss = total * scale + l2_penalty(self.model.params(), self.l2);
        let grads = self.model.params().into_iter().filter(|p| p.trainable).map(|p| p.grad.clone()).collect();
        (loss, grads)
    }
}
