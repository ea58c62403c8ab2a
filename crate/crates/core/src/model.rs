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

//! Entity-aware relation classifier on top of the transformer encoder.
//!
//! The encoder turns a marked sentence into hidden states `H`. The head reads
//! three vectors from `H`: the `[CLS]` state `H0`, and the averages of the
//! states covering each entity. Each goes through `tanh`, dropout and a
//! fully connected layer (one layer shared by both entities, one for `[CLS]`).
//! The three projections are concatenated and classified with a final
//! dropout + fully connected layer + softmax.
//!
//! The ablation variants drop the markers from the input (`NoSep`), drop the
//! entity vectors from the classifier (`NoEnt`), or both.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{RbertError, Result};
use crate::nn::attention::EncoderCache;
use crate::nn::checkpoint::Checkpoint;
use crate::nn::gradcheck::{check_gradients, GradCheckReport};
use crate::nn::{
    dropout, softmax_cross_entropy, softmax_rows, DropoutMask, Encoder, EncoderConfig, Linear, Mode,
    ParamStore,
};
use crate::tokenizer::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    NoSep,
    NoEnt,
    NoSepNoEnt,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoSep, Variant::NoEnt, Variant::NoSepNoEnt];

    /// Whether inputs carry the `$`/`#` entity markers.
    pub fn uses_markers(self) -> bool {
        matches!(self, Variant::Full | Variant::NoEnt)
    }

    /// Whether the pooled entity vectors feed the classifier.
    pub fn uses_entities(self) -> bool {
        matches!(self, Variant::Full | Variant::NoSep)
    }

    /// Row label used in ablation tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Full => "R-BERT",
            Variant::NoSep => "R-BERT-NO-SEP",
            Variant::NoEnt => "R-BERT-NO-ENT",
            Variant::NoSepNoEnt => "R-BERT-NO-SEP-NO-ENT",
        }
    }

    pub fn config_name(self) -> &'static str {
        match self {
            Variant::Full => "FULL",
            Variant::NoSep => "NO_SEP",
            Variant::NoEnt => "NO_ENT",
            Variant::NoSepNoEnt => "NO_SEP_NO_ENT",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.config_name())
    }
}

impl FromStr for Variant {
    type Err = RbertError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let norm = norm.strip_prefix("R_BERT").unwrap_or(&norm);
        let norm = norm.trim_start_matches('_');
        match norm {
            "" | "FULL" => Ok(Variant::Full),
            "NO_SEP" => Ok(Variant::NoSep),
            "NO_ENT" => Ok(Variant::NoEnt),
            "NO_SEP_NO_ENT" => Ok(Variant::NoSepNoEnt),
            _ => Err(RbertError::Config(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_positions: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_size: usize,
    pub num_labels: usize,
    pub dropout: f64,
    pub variant: Variant,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("max_positions", self.max_positions),
            ("hidden_size", self.hidden_size),
            ("num_heads", self.num_heads),
            ("ff_size", self.ff_size),
            ("num_labels", self.num_labels),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(RbertError::Config(format!("{name} must be positive")));
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return Err(RbertError::Config(format!(
                "hidden_size {} is not divisible by num_heads {}",
                self.hidden_size, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(RbertError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Width of the classifier input: `3d` with entity vectors, `d` without.
    pub fn classifier_input_size(&self) -> usize {
        if self.variant.uses_entities() {
            3 * self.hidden_size
        } else {
            self.hidden_size
        }
    }

    fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            vocab_size: self.vocab_size,
            max_positions: self.max_positions,
            hidden_size: self.hidden_size,
            num_layers: self.num_layers,
            num_heads: self.num_heads,
            ff_size: self.ff_size,
        }
    }

    pub fn to_metadata(&self) -> String {
        format!(
            "vocab_size = {}\nmax_positions = {}\nhidden_size = {}\nnum_layers = {}\nnum_heads = {}\nff_size = {}\nnum_labels = {}\ndropout = {}\nvariant = {}\n",
            self.vocab_size,
            self.max_positions,
            self.hidden_size,
            self.num_layers,
            self.num_heads,
            self.ff_size,
            self.num_labels,
            self.dropout,
            self.variant
        )
    }

    pub fn from_metadata(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RbertError::Checkpoint(format!("bad metadata line {line:?}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| RbertError::Checkpoint(format!("metadata is missing {k}")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| RbertError::Checkpoint(format!("metadata {k} is not an integer")))
        };
        Ok(ModelConfig {
            vocab_size: int("vocab_size")?,
            max_positions: int("max_positions")?,
            hidden_size: int("hidden_size")?,
            num_layers: int("num_layers")?,
            num_heads: int("num_heads")?,
            ff_size: int("ff_size")?,
            num_labels: int("num_labels")?,
            dropout: get("dropout")?
                .parse()
                .map_err(|_| RbertError::Checkpoint("metadata dropout is not a number".into()))?,
            variant: get("variant")?.parse()?,
        })
    }
}

/// Which entity a pooled vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    First,
    Second,
}

/// Head parameters. `entity` is the single layer behind both entity
/// projections; it is absent in the variants that do not use entity vectors.
#[derive(Debug, Clone, Copy)]
pub struct Head {
    pub cls: Linear,
    pub entity: Option<Linear>,
    pub classifier: Linear,
    pub dropout: f64,
}

pub const HEAD_W0: &str = "head.W0";
pub const HEAD_B0: &str = "head.b0";
pub const HEAD_WENT: &str = "head.Went";
pub const HEAD_BENT: &str = "head.bent";
pub const HEAD_W3: &str = "head.W3";
pub const HEAD_B3: &str = "head.b3";

impl Head {
    pub fn new<R: rand::Rng + ?Sized>(store: &mut ParamStore, config: &ModelConfig, rng: &mut R) -> Self {
        let d = config.hidden_size;
        let cls = Linear::new(store, HEAD_W0, HEAD_B0, d, d, rng);
        let entity = config
            .variant
            .uses_entities()
            .then(|| Linear::new(store, HEAD_WENT, HEAD_BENT, d, d, rng));
        let classifier = Linear::new(store, HEAD_W3, HEAD_B3, config.classifier_input_size(), config.num_labels, rng);
        Head {
            cls,
            entity,
            classifier,
            dropout: config.dropout,
        }
    }

    /// The projection applied to the given entity. Both entities resolve to
    /// the same layer.
    pub fn entity_projection(&self, _which: Entity) -> Option<Linear> {
        self.entity
    }
}

/// Mean of rows `start..=end` of `hidden`.
pub fn entity_average(hidden: ArrayView2<'_, f64>, range: (usize, usize)) -> Result<Array1<f64>> {
    let (start, end) = range;
    if start > end || end >= hidden.nrows() {
        return Err(RbertError::InvalidArgument(format!(
            "entity range {start}..={end} outside {} positions",
            hidden.nrows()
        )));
    }
    let count = (end - start + 1) as f64;
    Ok(hidden.slice(s![start..=end, ..]).sum_axis(Axis(0)) / count)
}

/// Intermediate values of `W·dropout(tanh(x)) + b`, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ProjectionCache {
    activated: Array2<f64>,
    dropped: Array2<f64>,
    mask: DropoutMask,
}

/// `W·dropout(tanh(x)) + b`, row-wise.
fn project(
    layer: &Linear,
    store: &ParamStore,
    x: &Array2<f64>,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Result<(Array2<f64>, ProjectionCache)> {
    let activated = x.mapv(f64::tanh);
    let (dropped, mask) = dropout(&activated, rate, mode);
    let out = layer.forward(store, &dropped)?;
    Ok((out, ProjectionCache { activated, dropped, mask }))
}

fn project_backward(layer: &Linear, store: &mut ParamStore, cache: &ProjectionCache, dy: &Array2<f64>) -> Array2<f64> {
    let ddropped = layer.backward(store, &cache.dropped, dy);
    let dactivated = cache.mask.backward(&ddropped);
    dactivated * &cache.activated.mapv(|t| 1.0 - t * t)
}

/// `H'_e = W_ent·tanh(avg) + b_ent` for one or more pooled entity vectors (rows).
pub fn entity_project(avg: &Array2<f64>, head: &Head, store: &ParamStore, mode: &mut Mode<'_>) -> Result<Array2<f64>> {
    let layer = head
        .entity
        .ok_or_else(|| RbertError::InvalidArgument("this variant has no entity projection".into()))?;
    Ok(project(&layer, store, avg, head.dropout, mode)?.0)
}

/// `H'_0 = W0·tanh(H0) + b0` for one or more `[CLS]` states (rows).
pub fn cls_project(h0: &Array2<f64>, head: &Head, store: &ParamStore, mode: &mut Mode<'_>) -> Result<Array2<f64>> {
    Ok(project(&head.cls, store, h0, head.dropout, mode)?.0)
}

/// Softmax over `W3·dropout(concat(parts)) + b3`. With entity vectors the
/// parts are `(H'_0, H'_1, H'_2)` in that order; without them just `H'_0`.
pub fn classify(parts: &[&Array2<f64>], head: &Head, store: &ParamStore, mode: &mut Mode<'_>) -> Result<Array2<f64>> {
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    let joined = concatenate(Axis(1), &views).map_err(|e| RbertError::Shape(e.to_string()))?;
    let (dropped, _) = dropout(&joined, head.dropout, mode);
    Ok(softmax_rows(&head.classifier.forward(store, &dropped)?))
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    encoder: Vec<EncoderCache>,
    lengths: Vec<usize>,
    e1_ranges: Vec<(usize, usize)>,
    e2_ranges: Vec<(usize, usize)>,
    cls: ProjectionCache,
    entities: Option<(ProjectionCache, ProjectionCache)>,
    joined_dropped: Array2<f64>,
    joined_mask: DropoutMask,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Array2<f64>,
    pub probabilities: Array2<f64>,
    pub cache: ForwardCache,
}

/// Encoder + head, with all parameters in one store.
#[derive(Debug, Clone)]
pub struct RBertModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub encoder: Encoder,
    pub head: Head,
}

impl RBertModel {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = Encoder::new(&mut store, config.encoder_config(), &mut rng)?;
        let head = Head::new(&mut store, &config, &mut rng);
        Ok(RBertModel {
            config,
            store,
            encoder,
            head,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_store(&self.store, self.config.to_metadata())
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Self> {
        let config = ModelConfig::from_metadata(&checkpoint.metadata)?;
        let mut model = RBertModel::new(config, 0)?;
        checkpoint.restore_into(&mut model.store)?;
        Ok(model)
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.marked != self.config.variant.uses_markers() {
            return Err(RbertError::InvalidArgument(format!(
                "variant {} expects {} inputs, batch was encoded {}",
                self.config.variant,
                if self.config.variant.uses_markers() { "marked" } else { "marker-free" },
                if batch.marked { "with markers" } else { "without markers" },
            )));
        }
        if batch.size() == 0 {
            return Err(RbertError::InvalidArgument("empty batch".into()));
        }
        Ok(())
    }

    /// Encoder states for row `i` of the batch, padding excluded.
    pub fn hidden_states(&self, batch: &Batch, i: usize) -> Result<Array2<f64>> {
        let len = batch.lengths[i];
        let ids = batch.unpadded(i);
        let mask: Vec<u8> = batch.attention_mask.row(i).iter().take(len).copied().collect();
        Ok(self.encoder.forward(&self.store, &ids, &mask)?.0)
    }

    pub fn forward(&self, batch: &Batch, mode: Mode<'_>) -> Result<ForwardOutput> {
        self.forward_with(&self.store, batch, mode)
    }

    /// Forward pass reading parameter values from `store` instead of the
    /// model's own store. `store` must have the model's layout.
    pub fn forward_with(&self, store: &ParamStore, batch: &Batch, mut mode: Mode<'_>) -> Result<ForwardOutput> {
        self.check_batch(batch)?;
        let b = batch.size();
        let d = self.config.hidden_size;
        let use_entities = self.config.variant.uses_entities();

        let mut encoder_caches = Vec::with_capacity(b);
        let mut h0 = Array2::zeros((b, d));
        let mut avg1 = Array2::zeros((b, d));
        let mut avg2 = Array2::zeros((b, d));
        for i in 0..b {
            // Padding is a suffix and masked out of attention, so the real
            // positions only ever see the unpadded prefix.
            let len = batch.lengths[i];
            let ids = batch.unpadded(i);
            let mask: Vec<u8> = batch.attention_mask.row(i).iter().take(len).copied().collect();
            let (hidden, cache) = self.encoder.forward(store, &ids, &mask)?;
            h0.row_mut(i).assign(&hidden.row(0));
            if use_entities {
                avg1.row_mut(i).assign(&entity_average(hidden.view(), batch.e1_ranges[i])?);
                avg2.row_mut(i).assign(&entity_average(hidden.view(), batch.e2_ranges[i])?);
            }
            encoder_caches.push(cache);
        }

        let rate = self.config.dropout;
        let (p0, cls_cache) = project(&self.head.cls, store, &h0, rate, &mut mode)?;
        let (joined, entities) = match self.head.entity {
            Some(layer) => {
                let (p1, c1) = project(&layer, store, &avg1, rate, &mut mode)?;
                let (p2, c2) = project(&layer, store, &avg2, rate, &mut mode)?;
                let joined = concatenate![Axis(1), p0, p1, p2];
                (joined, Some((c1, c2)))
            }
            None => (p0, None),
        };
        let (joined_dropped, joined_mask) = dropout(&joined, rate, &mut mode);
        let logits = self.head.classifier.forward(store, &joined_dropped)?;
        let probabilities = softmax_rows(&logits);
        Ok(ForwardOutput {
            logits,
            probabilities,
            cache: ForwardCache {
                encoder: encoder_caches,
                lengths: batch.lengths.clone(),
                e1_ranges: batch.e1_ranges.clone(),
                e2_ranges: batch.e2_ranges.clone(),
                cls: cls_cache,
                entities,
                joined_dropped,
                joined_mask,
            },
        })
    }

    /// Accumulates parameter gradients for the given logit gradient.
    pub fn backward(&mut self, cache: &ForwardCache, dlogits: &Array2<f64>) {
        let d = self.config.hidden_size;
        let head = self.head;
        let store = &mut self.store;
        let djoined = cache
            .joined_mask
            .backward(&head.classifier.backward(store, &cache.joined_dropped, dlogits));
        let dp0 = djoined.slice(s![.., 0..d]).to_owned();
        let dh0 = project_backward(&head.cls, store, &cache.cls, &dp0);
        let entity_grads = match (head.entity, &cache.entities) {
            (Some(layer), Some((c1, c2))) => {
                let dp1 = djoined.slice(s![.., d..2 * d]).to_owned();
                let dp2 = djoined.slice(s![.., 2 * d..3 * d]).to_owned();
                Some((
                    project_backward(&layer, store, c1, &dp1),
                    project_backward(&layer, store, c2, &dp2),
                ))
            }
            _ => None,
        };

        for (i, enc_cache) in cache.encoder.iter().enumerate() {
            let mut dhidden = Array2::zeros((cache.lengths[i], d));
            {
                let mut row = dhidden.row_mut(0);
                row += &dh0.row(i);
            }
            if let Some((da1, da2)) = &entity_grads {
                for (range, da) in [(cache.e1_ranges[i], da1), (cache.e2_ranges[i], da2)] {
                    let share = da.row(i).to_owned() / (range.1 - range.0 + 1) as f64;
                    for t in range.0..=range.1 {
                        let mut row = dhidden.row_mut(t);
                        row += &share;
                    }
                }
            }
            self.encoder.backward(&mut self.store, enc_cache, &dhidden);
        }
    }

    /// Forward, mean cross-entropy, backward. Returns the loss and the forward
    /// output; gradients are accumulated into the store.
    pub fn loss_and_backward(&mut self, batch: &Batch, mode: Mode<'_>) -> Result<(f64, ForwardOutput)> {
        let out = self.forward(batch, mode)?;
        let (loss, dlogits) = softmax_cross_entropy(&out.logits, &batch.labels)?;
        if !loss.is_finite() {
            return Err(RbertError::NonFinite(format!("training loss is {loss}")));
        }
        self.backward(&out.cache, &dlogits);
        Ok((loss, out))
    }

    /// Compares the analytic gradient of the eval-mode mean cross-entropy on
    /// `batch` with central differences of step `step`, for every parameter.
    /// Leaves the accumulated gradients in the store.
    pub fn gradient_check(&mut self, batch: &Batch, step: f64) -> Result<GradCheckReport> {
        self.store.zero_grad();
        self.loss_and_backward(batch, Mode::Eval)?;
        let mut store = std::mem::replace(&mut self.store, ParamStore::new());
        let mut failure = None;
        let report = check_gradients(&mut store, step, |s| {
            match self
                .forward_with(s, batch, Mode::Eval)
                .and_then(|out| softmax_cross_entropy(&out.logits, &batch.labels))
            {
                Ok((loss, _)) => loss,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        self.store = store;
        match failure {
            Some(e) => Err(e),
            None => Ok(report),
        }
    }

    /// Eval-mode argmax per row; ties go to the lowest class index.
    pub fn predict(&self, batch: &Batch) -> Result<Vec<usize>> {
        let out = self.forward(batch, Mode::Eval)?;
        Ok(argmax_rows(&out.probabilities))
    }
}

/// Row-wise argmax, first index wins ties.
pub fn argmax_rows(values: &Array2<f64>) -> Vec<usize> {
    values
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                .0
        })
        .collect()
}
