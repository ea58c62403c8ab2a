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

//! Trains briefly, saves a checkpoint, reloads it and confirms the reloaded
//! model makes the same predictions.
//!
//! ```text
//! cargo run --release --example checkpoint_roundtrip -- [path]
//! ```

use rbert::nn::checkpoint::Checkpoint;
use rbert::scorer::score;
use rbert::tokenizer::{encode_all, EncodeOptions};
use rbert::{evaluate, make_synthetic_task, train, LabelSpace, RBertModel, SynthConfig, TrainConfig};

fn main() -> rbert::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rbert-example.ckpt"));
    let synth = SynthConfig { train_size: 200, test_size: 100, ..SynthConfig::default() };
    let (train_set, test_set) = make_synthetic_task(&synth)?;
    let vocab = synth.vocab();
    let config = TrainConfig { epochs: 10, max_len: 24, ..TrainConfig::scratch() };
    let options = EncodeOptions::new(config.max_len);
    let train_enc = encode_all(&train_set, &vocab, &options)?;
    let test_enc = encode_all(&test_set, &vocab, &options)?;

    let out = train(&train_enc, &config, vocab.len(), LabelSpace::semeval().len(), vocab.pad_id())?;
    out.model.checkpoint().save(&path)?;
    let reloaded = RBertModel::from_checkpoint(&Checkpoint::load(&path)?)?;

    let gold: Vec<_> = test_set.iter().map(|i| (i.id, i.label)).collect();
    let before = evaluate(&test_enc, &out.model, config.batch_size, vocab.pad_id())?;
    let after = evaluate(&test_enc, &reloaded, config.batch_size, vocab.pad_id())?;
    println!("checkpoint {} ({} bytes)", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    println!("macro-F1 before save {:.2}", score(&gold, &before.predictions)?.macro_f1);
    println!("macro-F1 after load  {:.2}", score(&gold, &after.predictions)?.macro_f1);
    println!("identical predictions: {}", before.predictions == after.predictions);
    Ok(())
}
