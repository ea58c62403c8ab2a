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

//! Dense numerical core: parameters, layers with hand-written backward
//! passes, the transformer encoder, Adam and the checkpoint container.
//!
//! Every activation is a 2-D `f64` array. Vectors are stored as `1×n` rows.

pub mod adam;
pub mod attention;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod param;

pub use adam::{Adam, AdamConfig};
pub use attention::{Encoder, EncoderConfig, MultiHeadAttention, TransformerBlock};
pub use layers::{
    dropout, gelu, layer_norm_backward, linear_backward, linear_forward, softmax_cross_entropy,
    softmax_rows, DropoutMask, LayerNorm, Linear,
};
pub use param::{ParamId, ParamStore, Parameter};

use rand::RngCore;

/// Whether dropout is active. Training mode carries the RNG that draws the
/// dropout masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}
