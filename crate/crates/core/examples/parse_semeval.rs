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

//! Parses a SemEval-2010 Task 8 style file, prints label statistics and checks
//! that rendering and re-parsing reproduces every instance.
//!
//! ```text
//! cargo run --example parse_semeval -- [dataset] [vocab-out]
//! ```
//!
//! With `vocab-out`, also writes the corpus's whole-word vocabulary there.

use std::collections::BTreeMap;

use rbert::semeval::render_dataset;
use rbert::{parse_dataset, DatasetFormat, Vocab};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/semeval_sample.txt").into());
    let text = std::fs::read_to_string(&path)?;
    let instances = parse_dataset(&text, DatasetFormat::Train)?;
    println!("{path}: {} instances", instances.len());

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for inst in &instances {
        *counts.entry(inst.label.to_string()).or_default() += 1;
    }
    for (label, n) in &counts {
        println!("  {n:>5}  {label}");
    }
    if let Some(first) = instances.first() {
        println!(
            "first: id {} e1 {:?} e2 {:?} -> {}",
            first.id,
            first.entity_text(first.e1),
            first.entity_text(first.e2),
            first.label
        );
    }

    let reparsed = parse_dataset(&render_dataset(&instances), DatasetFormat::Train)?;
    println!("round trip: {}", if reparsed == instances { "identical" } else { "MISMATCH" });

    if let Some(out) = args.next() {
        let vocab = Vocab::from_instances(&instances)?;
        std::fs::write(&out, vocab.to_file_contents())?;
        println!("wrote {} vocabulary entries to {out}", vocab.len());
    }
    Ok(())
}
