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

//! Scores a prediction file against an answer key with the directional
//! macro-F1 over the nine relation families.
//!
//! ```text
//! cargo run --example score -- [gold] [pred]
//! ```

fn main() -> rbert::Result<()> {
    let fixture = |name: &str| format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let gold = args.next().unwrap_or_else(|| fixture("score_gold.txt"));
    let pred = args.next().unwrap_or_else(|| fixture("score_pred.txt"));
    print!("{}", rbert::scorer::score_files(&gold, &pred)?);
    Ok(())
}
