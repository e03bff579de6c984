//! Mini-batch Adam training with step decay and early stopping.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use crate::graph::{GraphSample, RadarGraph};
use crate::nn::{adam_step, cross_entropy, loss_and_gradients, predict_label, AdamState, ModelParams};
use crate::sim::seeds::{derive_seed, TAG_SHUFFLE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub step_decay: f64,
    /// Epochs between learning-rate decays.
    pub decay_period: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            initial_lr: 0.001,
            step_decay: 0.5,
            decay_period: 30,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!("step_decay {} outside (0, 1]", self.step_decay)));
        }
        if self.decay_period == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("decay_period and max_epochs must be positive".into()));
        }
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.initial_lr)));
        }
        Ok(())
    }

    /// Learning rate used during 1-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = (epoch.max(1) - 1) / self.decay_period;
        self.initial_lr * self.step_decay.powi(decays as i32)
    }

    pub fn to_table(&self) -> BTreeMap<String, toml::Value> {
        match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t.into_iter().collect(),
            _ => BTreeMap::new(),
        }
    }
}

/// Stops after `patience` consecutive epochs without a strictly lower validation loss.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, best_epoch: 0, bad_epochs: 0 }
    }

    /// Records one epoch; returns `(improved, stop)`.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            (true, false)
        } else {
            self.bad_epochs += 1;
            (false, self.patience > 0 && self.bad_epochs >= self.patience)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_acc,lr\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.val_acc, e.lr));
        }
        s
    }
}

/// Class probabilities for every sample, computed in parallel, in input order.
pub fn predict_probs(params: &ModelParams<f64>, samples: &[GraphSample], graph: &RadarGraph) -> Result<Vec<Vec<f64>>> {
    let model = params.model();
    let a_hat = graph.normalized_adjacency.data();
    samples
        .par_iter()
        .map(|s| {
            if s.signals.rows() != params.spec.num_nodes() || graph.subnet_of != params.spec.subnet_of {
                return Err(Error::shape(format!(
                    "model expects {} nodes in subnets {:?}; sample has signals {:?}, graph subnets {:?}",
                    params.spec.num_nodes(),
                    params.spec.subnet_of,
                    s.signals.shape(),
                    graph.subnet_of
                )));
            }
            let cache = model.forward(&params.values, s.signals.data(), s.signals.cols(), a_hat)?;
            Ok(cache.probs().to_vec())
        })
        .collect()
}

pub fn predict(params: &ModelParams<f64>, samples: &[GraphSample], graph: &RadarGraph) -> Result<Vec<u8>> {
    Ok(predict_probs(params, samples, graph)?.iter().map(|p| predict_label(p)).collect())
}

/// Mean clamped cross-entropy and accuracy.
pub fn loss_and_accuracy(params: &ModelParams<f64>, samples: &[GraphSample], graph: &RadarGraph) -> Result<(f64, f64)> {
    let probs = predict_probs(params, samples, graph)?;
    let mut loss = 0.0;
    let mut correct = 0;
    for (p, s) in probs.iter().zip(samples) {
        loss += cross_entropy(p, s.label as usize).0;
        correct += usize::from(predict_label(p) == s.label);
    }
    let n = samples.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

pub fn evaluate(params: &ModelParams<f64>, samples: &[GraphSample], graph: &RadarGraph) -> Result<MetricsReport> {
    let predicted = predict(params, samples, graph)?;
    let actual: Vec<u8> = samples.iter().map(|s| s.label).collect();
    MetricsReport::from_predictions(&predicted, &actual)
}

/// Trains from `init` and returns the parameters of the best validation epoch.
///
/// With an empty validation set the training loss drives early stopping.
pub fn train(
    init: ModelParams<f64>,
    train_set: &[GraphSample],
    validation: &[GraphSample],
    graph: &RadarGraph,
    cfg: &TrainConfig,
) -> Result<(ModelParams<f64>, TrainLog)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut params = init;
    let mut best = params.clone();
    let mut adam = AdamState::<f64>::new(params.values.len(), cfg.initial_lr);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut log = TrainLog { best_val_loss: f64::INFINITY, ..TrainLog::default() };
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let lr = cfg.lr_at(epoch);
        adam.lr = lr;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SHUFFLE, epoch as u64]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&GraphSample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, grad) = loss_and_gradients(&params, &batch, graph).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch, batch: b + 1 },
                other => other,
            })?;
            total += loss * chunk.len() as f64;
            if lr > 0.0 {
                adam_step(&mut adam, &mut params.values, &grad)?;
            }
        }
        let train_loss = total / train_set.len() as f64;
        let (val_loss, val_acc) = if validation.is_empty() {
            (train_loss, f64::NAN)
        } else {
            loss_and_accuracy(&params, validation, graph)?
        };
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        log.epochs.push(EpochRecord { epoch, train_loss, val_loss, val_acc, lr });
        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            best = params.clone();
            log.best_epoch = epoch;
            log.best_val_loss = val_loss;
        }
        if stop {
            break;
        }
    }
    Ok((best, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_stops_at_eleven_when_strictly_worsening() {
        let mut es = EarlyStopping::new(10);
        let mut stopped = None;
        for epoch in 1..=100 {
            if es.observe(epoch, epoch as f64).1 {
                stopped = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped, Some(11));
        assert_eq!(es.best_epoch, 1);
    }

    #[test]
    fn lr_halves_every_period() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_at(1), 0.001);
        assert_eq!(cfg.lr_at(30), 0.001);
        assert_eq!(cfg.lr_at(31), 0.0005);
        assert_eq!(cfg.lr_at(61), 0.00025);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { step_decay: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { step_decay: 1.5, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
