// Copyright 2026 The rbert Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Mini-batch training with cross-entropy and Adam.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{RbertError, Result};
use crate::model::{argmax_rows, ModelConfig, RBertModel, Variant};
use crate::nn::{Adam, AdamConfig, Mode};
use crate::semeval::{DirectionalLabel, LabelSpace};
use crate::tokenizer::{pad_batch, Batch, EncodedExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Batch 16, length 128, lr 2e-5, 5 epochs, dropout 0.1, base-size encoder.
    Finetune,
    /// Small encoder trained from random initialization.
    Scratch,
}

impl std::str::FromStr for Profile {
    type Err = RbertError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "finetune" => Ok(Profile::Finetune),
            "scratch" => Ok(Profile::Scratch),
            _ => Err(RbertError::Config(format!("unknown profile {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_len: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    pub variant: Variant,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_size: usize,
}

impl TrainConfig {
    pub fn finetune() -> Self {
        TrainConfig {
            batch_size: 16,
            max_len: 128,
            learning_rate: 2e-5,
            epochs: 5,
            dropout: 0.1,
            seed: 42,
            variant: Variant::Full,
            hidden_size: 768,
            num_layers: 12,
            num_heads: 12,
            ff_size: 3072,
        }
    }

    pub fn scratch() -> Self {
        TrainConfig {
            batch_size: 16,
            max_len: 128,
            learning_rate: 1e-3,
            epochs: 200,
            dropout: 0.1,
            seed: 42,
            variant: Variant::Full,
            hidden_size: 32,
            num_layers: 2,
            num_heads: 4,
            ff_size: 64,
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Finetune => Self::finetune(),
            Profile::Scratch => Self::scratch(),
        }
    }

    pub fn model_config(&self, vocab_size: usize, num_labels: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            max_positions: self.max_len,
            hidden_size: self.hidden_size,
            num_layers: self.num_layers,
            num_heads: self.num_heads,
            ff_size: self.ff_size,
            num_labels,
            dropout: self.dropout,
            variant: self.variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_len == 0 || self.hidden_size == 0 || self.num_heads == 0 || self.ff_size == 0 {
            return Err(RbertError::Config("sizes must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(RbertError::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(RbertError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| RbertError::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "batch_size" => self.batch_size = num(key, value)?,
            "max_len" => self.max_len = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "hidden_size" => self.hidden_size = num(key, value)?,
            "num_layers" => self.num_layers = num(key, value)?,
            "num_heads" => self.num_heads = num(key, value)?,
            "ff_size" => self.ff_size = num(key, value)?,
            _ => return Err(RbertError::Config(format!("unknown training key {key:?}"))),
        }
        Ok(())
    }

    pub fn entries(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("batch_size", self.batch_size.to_string()),
            ("max_len", self.max_len.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("epochs", self.epochs.to_string()),
            ("dropout", self.dropout.to_string()),
            ("seed", self.seed.to_string()),
            ("variant", self.variant.to_string()),
            ("hidden_size", self.hidden_size.to_string()),
            ("num_layers", self.num_layers.to_string()),
            ("num_heads", self.num_heads.to_string()),
            ("ff_size", self.ff_size.to_string()),
        ])
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::scratch()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss over the epoch's examples.
    pub loss: f64,
    /// Fraction of training examples predicted correctly during the epoch
    /// (training mode, dropout active).
    pub accuracy: f64,
}

impl fmt::Display for EpochMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:.6}\t{:.4}", self.epoch, self.loss, self.accuracy)
    }
}

/// Tab-separated metrics log, prefixed with `#` lines recording the config
/// and the optimizer constants.
pub fn metrics_log(config: &TrainConfig, adam: &AdamConfig, metrics: &[EpochMetrics]) -> String {
    let mut out = String::new();
    for (k, v) in config.entries() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&format!(
        "# adam beta1 = {} beta2 = {} epsilon = {}\n",
        adam.beta1, adam.beta2, adam.epsilon
    ));
    out.push_str("epoch\tloss\taccuracy\n");
    for m in metrics {
        out.push_str(&format!("{m}\n"));
    }
    out
}

/// Owns the model and optimizer state during training.
pub struct Trainer {
    pub model: RBertModel,
    pub adam: Adam,
    pub config: TrainConfig,
    shuffle_rng: ChaCha8Rng,
    dropout_rng: ChaCha8Rng,
    pad_id: u32,
}

impl Trainer {
    pub fn new(config: TrainConfig, vocab_size: usize, num_labels: usize, pad_id: u32) -> Result<Self> {
        config.validate()?;
        let model = RBertModel::new(config.model_config(vocab_size, num_labels), config.seed)?;
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
        shuffle_rng.set_stream(1);
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
        dropout_rng.set_stream(2);
        Ok(Trainer {
            model,
            adam: Adam::new(AdamConfig::with_learning_rate(config.learning_rate)),
            config,
            shuffle_rng,
            dropout_rng,
            pad_id,
        })
    }

    /// One optimizer step on `batch`. Returns the batch loss and the number of
    /// correct training-mode predictions.
    pub fn step(&mut self, batch: &Batch) -> Result<(f64, usize)> {
        let (loss, out) = self
            .model
            .loss_and_backward(batch, Mode::Train(&mut self.dropout_rng))?;
        self.adam.step(&mut self.model.store);
        if !self.model.store.all_finite() {
            return Err(RbertError::NonFinite(format!(
                "parameters after step {}",
                self.adam.steps_taken()
            )));
        }
        let correct = argmax_rows(&out.probabilities)
            .iter()
            .zip(&batch.labels)
            .filter(|(p, l)| p == l)
            .count();
        Ok((loss, correct))
    }

    pub fn run_epoch(&mut self, dataset: &[EncodedExample], epoch: usize) -> Result<EpochMetrics> {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(self.config.batch_size) {
            let examples: Vec<&EncodedExample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let batch = pad_batch(&examples, self.pad_id)?;
            let (loss, c) = self.step(&batch)?;
            loss_sum += loss * chunk.len() as f64;
            correct += c;
        }
        Ok(EpochMetrics {
            epoch,
            loss: loss_sum / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
        })
    }
}

fn check_dataset(dataset: &[EncodedExample], config: &TrainConfig, num_labels: usize) -> Result<()> {
    if dataset.is_empty() {
        return Err(RbertError::InvalidArgument("training set is empty".into()));
    }
    for ex in dataset {
        if ex.label_index >= num_labels {
            return Err(RbertError::InvalidArgument(format!(
                "example {} has label {} outside {num_labels} classes",
                ex.id, ex.label_index
            )));
        }
        if ex.marked != config.variant.uses_markers() {
            return Err(RbertError::InvalidArgument(format!(
                "example {} was encoded {} markers but variant {} needs the opposite",
                ex.id,
                if ex.marked { "with" } else { "without" },
                config.variant
            )));
        }
        if ex.max_len != config.max_len {
            return Err(RbertError::InvalidArgument(format!(
                "example {} was encoded with max_len {}, config says {}",
                ex.id, ex.max_len, config.max_len
            )));
        }
    }
    Ok(())
}

pub struct TrainOutput {
    pub model: RBertModel,
    pub metrics: Vec<EpochMetrics>,
    pub adam: AdamConfig,
}

/// Trains a fresh model for `config.epochs` epochs. The last partial batch of
/// each epoch is kept.
pub fn train(
    dataset: &[EncodedExample],
    config: &TrainConfig,
    vocab_size: usize,
    num_labels: usize,
    pad_id: u32,
) -> Result<TrainOutput> {
    check_dataset(dataset, config, num_labels)?;
    let mut trainer = Trainer::new(*config, vocab_size, num_labels, pad_id)?;
    let metrics = (1..=config.epochs)
        .map(|epoch| trainer.run_epoch(dataset, epoch))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainOutput {
        adam: trainer.adam.config,
        model: trainer.model,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<(u32, DirectionalLabel)>,
    pub accuracy: f64,
}

/// Eval-mode predictions for every example, mapped through the SemEval label space.
pub fn evaluate(dataset: &[EncodedExample], model: &RBertModel, batch_size: usize, pad_id: u32) -> Result<Evaluation> {
    let space = LabelSpace::semeval();
    let mut predictions = Vec::with_capacity(dataset.len());
    let mut correct = 0;
    for chunk in dataset.chunks(batch_size.max(1)) {
        let refs: Vec<&EncodedExample> = chunk.iter().collect();
        let batch = pad_batch(&refs, pad_id)?;
        for (ex, class) in chunk.iter().zip(model.predict(&batch)?) {
            let label = space.get(class).ok_or_else(|| {
                RbertError::InvalidArgument(format!("class {class} has no SemEval label"))
            })?;
            if class == ex.label_index {
                correct += 1;
            }
            predictions.push((ex.id, label));
        }
    }
    let accuracy = if dataset.is_empty() { 0.0 } else { correct as f64 / dataset.len() as f64 };
    Ok(Evaluation { predictions, accuracy })
}
