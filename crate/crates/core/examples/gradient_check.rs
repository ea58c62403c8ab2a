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

//! Checks the analytic gradient of the full model loss against central finite
//! differences, tensor by tensor.
//!
//! ```text
//! cargo run --release --example gradient_check -- [variant]
//! ```

use std::time::Instant;

use rbert::tokenizer::{encode_all, pad_batch, EncodeOptions};
use rbert::{make_synthetic_task, ModelConfig, RBertModel, SynthConfig, Variant};

fn main() -> rbert::Result<()> {
    let variant: Variant = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(Variant::Full);
    let synth = SynthConfig { num_families: 2, filler_words: 2, fillers_per_sentence: 1, ..SynthConfig::default() };
    let (train_set, _) = make_synthetic_task(&synth)?;
    let vocab = synth.vocab();
    let mut options = EncodeOptions::new(12);
    options.markers = variant.uses_markers();
    let encoded = encode_all(&train_set[..2], &vocab, &options)?;
    let mut batch = pad_batch(&encoded.iter().collect::<Vec<_>>(), vocab.pad_id())?;
    // Five output classes; pick targets inside that range.
    batch.labels = vec![1, 4];

    let config = ModelConfig {
        vocab_size: vocab.len(),
        max_positions: 12,
        hidden_size: 16,
        num_layers: 2,
        num_heads: 2,
        ff_size: 32,
        num_labels: 5,
        dropout: 0.0,
        variant,
    };
    let mut model = RBertModel::new(config, 3)?;
    let start = Instant::now();
    let report = model.gradient_check(&batch, 1e-5)?;
    for t in &report.tensors {
        println!("{:<45} rel err {:.2e}  max |grad| {:.2e}", t.name, t.max_relative_error, t.max_abs_gradient);
    }
    println!(
        "{} tensors, worst relative error {:.2e}, {:.1?}",
        report.tensors.len(),
        report.max_relative_error(),
        start.elapsed()
    );
    Ok(())
}
