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

//! Shows how one tagged sentence is turned into model input: entity markers,
//! WordPiece pieces, entity ranges, and the marker-free encoding used by the
//! ablations.
//!
//! ```text
//! cargo run --example tokenize
//! ```

use rbert::tokenizer::{detokenize, encode_with, EncodeOptions};
use rbert::{parse_dataset, DatasetFormat, Vocab};

fn main() -> rbert::Result<()> {
    let text = "1\t\"The <e1>kitchen</e1> is the last renovated part of the <e2>house</e2>.\"\nComponent-Whole(e1,e2)\n";
    let inst = parse_dataset(text, DatasetFormat::Train)?.remove(0);
    let vocab = Vocab::from_tokens([
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "$", "#", ".", "the", "kitchen", "is", "last", "renovated", "re",
        "##nov", "##ated", "part", "of", "house",
    ])?;

    for (title, options) in [
        ("with markers", EncodeOptions::new(32)),
        ("without markers", EncodeOptions::new(32).without_markers()),
    ] {
        let enc = encode_with(&inst, &vocab, &options)?;
        let pieces: Vec<&str> = enc.input_ids.iter().map(|&id| vocab.token(id).unwrap_or("?")).collect();
        println!("{title}:");
        println!("  pieces   {}", pieces.join(" "));
        println!("  ids      {:?}", enc.input_ids);
        println!("  e1 range {:?} -> {}", enc.e1_range, detokenize(&enc.input_ids[enc.e1_range.0..=enc.e1_range.1], &vocab));
        println!("  e2 range {:?} -> {}", enc.e2_range, detokenize(&enc.input_ids[enc.e2_range.0..=enc.e2_range.1], &vocab));
        println!("  label    {} (class {})", inst.label, enc.label_index);
    }

    let tight = EncodeOptions::new(10);
    match encode_with(&inst, &vocab, &tight) {
        Ok(_) => println!("max_len 10: encoded"),
        Err(e) => println!("max_len 10: {e}"),
    }
    Ok(())
}
