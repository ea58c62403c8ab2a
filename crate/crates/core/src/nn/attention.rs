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

//! Post-norm transformer encoder.

use ndarray::{s, Array2, Axis};
use rand::Rng;

use super::layers::{gelu, gelu_grad, LayerNorm, LayerNormCache, Linear};
use super::param::{ParamId, ParamStore};
use crate::error::{RbertError, Result};

/// Scaled dot-product self-attention over `heads` heads. Keys whose mask
/// entry is 0 receive zero attention weight.
#[derive(Debug, Clone, Copy)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// One `n×n` weight matrix per head.
    weights: Vec<Array2<f64>>,
    context: Array2<f64>,
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, dim: usize, heads: usize, rng: &mut R) -> Self {
        let mut lin = |name: &str| {
            Linear::new(
                store,
                format!("{prefix}.{name}.weight"),
                format!("{prefix}.{name}.bias"),
                dim,
                dim,
                rng,
            )
        };
        MultiHeadAttention {
            query: lin("query"),
            key: lin("key"),
            value: lin("value"),
            output: lin("output"),
            heads,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &Array2<f64>, mask: &[u8]) -> Result<(Array2<f64>, AttentionCache)> {
        let (n, d) = x.dim();
        if mask.len() != n {
            return Err(RbertError::Shape(format!("attention mask has {} entries for {n} positions", mask.len())));
        }
        if d % self.heads != 0 {
            return Err(RbertError::Shape(format!("hidden size {d} not divisible by {} heads", self.heads)));
        }
        let head_dim = d / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let q = self.query.forward(store, x)?;
        let k = self.key.forward(store, x)?;
        let v = self.value.forward(store, x)?;

        let mut context = Array2::zeros((n, d));
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * head_dim..(h + 1) * head_dim];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            for mut row in scores.rows_mut() {
                let max = row
                    .iter()
                    .zip(mask)
                    .filter(|(_, &m)| m != 0)
                    .fold(f64::NEG_INFINITY, |acc, (&v, _)| acc.max(v));
                let mut sum = 0.0;
                for (s, &m) in row.iter_mut().zip(mask) {
                    *s = if m != 0 { (*s - max).exp() } else { 0.0 };
                    sum += *s;
                }
                if sum > 0.0 {
                    row /= sum;
                }
            }
            context.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            weights.push(scores);
        }
        let out = self.output.forward(store, &context)?;
        Ok((
            out,
            AttentionCache {
                input: x.clone(),
                q,
                k,
                v,
                weights,
                context,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &AttentionCache, dy: &Array2<f64>) -> Array2<f64> {
        let d = cache.q.ncols();
        let head_dim = d / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let dcontext = self.output.backward(store, &cache.context, dy);

        let mut dq = Array2::zeros(cache.q.raw_dim());
        let mut dk = Array2::zeros(cache.k.raw_dim());
        let mut dv = Array2::zeros(cache.v.raw_dim());
        for (h, p) in cache.weights.iter().enumerate() {
            let cols = s![.., h * head_dim..(h + 1) * head_dim];
            let dctx = dcontext.slice(cols);
            let dp = dctx.dot(&cache.v.slice(cols).t());
            dv.slice_mut(cols).assign(&p.t().dot(&dctx));
            // softmax backward, row-wise
            let row_dot = (&dp * p).sum_axis(Axis(1)).insert_axis(Axis(1));
            let dscores = p * &(&dp - &row_dot) * scale;
            dq.slice_mut(cols).assign(&dscores.dot(&cache.k.slice(cols)));
            dk.slice_mut(cols).assign(&dscores.t().dot(&cache.q.slice(cols)));
        }
        let mut dx = self.query.backward(store, &cache.input, &dq);
        dx += &self.key.backward(store, &cache.input, &dk);
        dx += &self.value.backward(store, &cache.input, &dv);
        dx
    }
}

/// `LN(h + FFN(h))` with `h = LN(x + MHA(x))`.
#[derive(Debug, Clone, Copy)]
pub struct TransformerBlock {
    pub attention: MultiHeadAttention,
    pub attention_norm: LayerNorm,
    pub intermediate: Linear,
    pub output: Linear,
    pub output_norm: LayerNorm,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    attention: AttentionCache,
    attention_norm: LayerNormCache,
    hidden: Array2<f64>,
    pre_activation: Array2<f64>,
    activated: Array2<f64>,
    output_norm: LayerNormCache,
}

impl TransformerBlock {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        dim: usize,
        heads: usize,
        ff_dim: usize,
        rng: &mut R,
    ) -> Self {
        TransformerBlock {
            attention: MultiHeadAttention::new(store, &format!("{prefix}.attention"), dim, heads, rng),
            attention_norm: LayerNorm::new(store, &format!("{prefix}.attention_norm"), dim),
            intermediate: Linear::new(
                store,
                format!("{prefix}.intermediate.weight"),
                format!("{prefix}.intermediate.bias"),
                dim,
                ff_dim,
                rng,
            ),
            output: Linear::new(
                store,
                format!("{prefix}.output.weight"),
                format!("{prefix}.output.bias"),
                ff_dim,
                dim,
                rng,
            ),
            output_norm: LayerNorm::new(store, &format!("{prefix}.output_norm"), dim),
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &Array2<f64>, mask: &[u8]) -> Result<(Array2<f64>, BlockCache)> {
        let (attended, attention) = self.attention.forward(store, x, mask)?;
        let (hidden, attention_norm) = self.attention_norm.forward(store, &(x + &attended));
        let pre_activation = self.intermediate.forward(store, &hidden)?;
        let activated = pre_activation.mapv(gelu);
        let ff = self.output.forward(store, &activated)?;
        let (out, output_norm) = self.output_norm.forward(store, &(&hidden + &ff));
        Ok((
            out,
            BlockCache {
                attention,
                attention_norm,
                hidden,
                pre_activation,
                activated,
                output_norm,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &BlockCache, dy: &Array2<f64>) -> Array2<f64> {
        let dsum2 = self.output_norm.backward(store, &cache.output_norm, dy);
        let dactivated = self.output.backward(store, &cache.activated, &dsum2);
        let dpre = dactivated * &cache.pre_activation.mapv(gelu_grad);
        let mut dhidden = self.intermediate.backward(store, &cache.hidden, &dpre);
        dhidden += &dsum2;
        let dsum1 = self.attention_norm.backward(store, &cache.attention_norm, &dhidden);
        let mut dx = self.attention.backward(store, &cache.attention, &dsum1);
        dx += &dsum1;
        dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub max_positions: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_size: usize,
}

/// Token + position embeddings, embedding layer norm, then a stack of
/// [`TransformerBlock`]s. Maps one id sequence to an `n×d` state matrix.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub token_embeddings: ParamId,
    pub position_embeddings: ParamId,
    pub embedding_norm: LayerNorm,
    pub blocks: Vec<TransformerBlock>,
}

#[derive(Debug, Clone)]
pub struct EncoderCache {
    ids: Vec<u32>,
    embedding_norm: LayerNormCache,
    blocks: Vec<BlockCache>,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, config: EncoderConfig, rng: &mut R) -> Result<Self> {
        if config.num_heads == 0 || !config.hidden_size.is_multiple_of(config.num_heads) {
            return Err(RbertError::Config(format!(
                "hidden size {} must be divisible by head count {}",
                config.hidden_size, config.num_heads
            )));
        }
        let d = config.hidden_size;
        let token_embeddings = store.add_glorot("encoder.embeddings.token", config.vocab_size, d, rng);
        let position_embeddings = store.add_glorot("encoder.embeddings.position", config.max_positions, d, rng);
        let embedding_norm = LayerNorm::new(store, "encoder.embeddings.norm", d);
        let blocks = (0..config.num_layers)
            .map(|l| TransformerBlock::new(store, &format!("encoder.layer{l}"), d, config.num_heads, config.ff_size, rng))
            .collect();
        Ok(Encoder {
            config,
            token_embeddings,
            position_embeddings,
            embedding_norm,
            blocks,
        })
    }

    pub fn forward(&self, store: &ParamStore, ids: &[u32], mask: &[u8]) -> Result<(Array2<f64>, EncoderCache)> {
        let n = ids.len();
        if n > self.config.max_positions {
            return Err(RbertError::Shape(format!(
                "sequence of {n} exceeds {} positions",
                self.config.max_positions
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= self.config.vocab_size) {
            return Err(RbertError::InvalidArgument(format!("token id {bad} outside vocabulary")));
        }
        let tokens = store.value(self.token_embeddings);
        let positions = store.value(self.position_embeddings);
        let mut embedded = Array2::zeros((n, self.config.hidden_size));
        for (i, &id) in ids.iter().enumerate() {
            let mut row = embedded.row_mut(i);
            row.assign(&tokens.row(id as usize));
            row += &positions.row(i);
        }
        let (mut hidden, embedding_norm) = self.embedding_norm.forward(store, &embedded);
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, cache) = block.forward(store, &hidden, mask)?;
            hidden = next;
            blocks.push(cache);
        }
        Ok((
            hidden,
            EncoderCache {
                ids: ids.to_vec(),
                embedding_norm,
                blocks,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &EncoderCache, dhidden: &Array2<f64>) {
        let mut grad = dhidden.clone();
        for (block, block_cache) in self.blocks.iter().zip(&cache.blocks).rev() {
            grad = block.backward(store, block_cache, &grad);
        }
        let dembedded = self.embedding_norm.backward(store, &cache.embedding_norm, &grad);
        let n = cache.ids.len();
        {
            let dpos = store.grad_mut(self.position_embeddings);
            let mut head = dpos.slice_mut(s![..n, ..]);
            head += &dembedded;
        }
        let dtok = store.grad_mut(self.token_embeddings);
        for (i, &id) in cache.ids.iter().enumerate() {
            let mut row = dtok.row_mut(id as usize);
            row += &dembedded.row(i);
        }
    }
}
