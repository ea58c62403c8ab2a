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

//! Trains the full model on the synthetic marker task and reports test macro-F1.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [seed] [variant]
//! ```

use std::time::Instant;

use rbert::scorer::{chance_macro_f1, score};
use rbert::tokenizer::{encode_all, EncodeOptions};
use rbert::{evaluate, make_synthetic_task, train, LabelSpace, SynthConfig, TrainConfig, Variant};

fn main() -> rbert::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse().expect("epochs")).unwrap_or(40);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);
    let variant: Variant = args.next().map(|a| a.parse()).transpose()?.unwrap_or(Variant::Full);

    let synth = SynthConfig { seed, ..SynthConfig::default() };
    let (train_set, test_set) = make_synthetic_task(&synth)?;
    let vocab = synth.vocab();
    let config = TrainConfig { epochs, max_len: 24, seed, variant, ..TrainConfig::scratch() };
    let mut options = EncodeOptions::new(config.max_len);
    options.markers = variant.uses_markers();
    let train_enc = encode_all(&train_set, &vocab, &options)?;
    let test_enc = encode_all(&test_set, &vocab, &options)?;

    let start = Instant::now();
    let out = train(&train_enc, &config, vocab.len(), LabelSpace::semeval().len(), vocab.pad_id())?;
    for m in &out.metrics {
        println!("{m}");
    }
    let eval = evaluate(&test_enc, &out.model, config.batch_size, vocab.pad_id())?;
    let gold: Vec<_> = test_set.iter().map(|i| (i.id, i.label)).collect();
    let report = score(&gold, &eval.predictions)?;
    println!("{}", report.render());
    let gold_labels: Vec<_> = gold.iter().map(|(_, l)| *l).collect();
    let pred_labels: Vec<_> = eval.predictions.iter().map(|(_, l)| *l).collect();
    println!("chance level for these predictions: {:.2}", chance_macro_f1(&gold_labels, &pred_labels));
    println!("test accuracy {:.4}, trained in {:.1?}", eval.accuracy, start.elapsed());
    Ok(())
}
