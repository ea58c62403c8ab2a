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

//! Trains all four model variants on the synthetic marker task with one seed
//! and prints the comparison table.
//!
//! ```text
//! cargo run --release --example ablation -- [epochs] [seed]
//! ```

use rbert::cli::{ablate, render_ablation};
use rbert::{make_synthetic_task, SynthConfig, TrainConfig};

fn main() -> rbert::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse().expect("epochs")).unwrap_or(40);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);
    let synth = SynthConfig { seed, ..SynthConfig::default() };
    let (train_set, test_set) = make_synthetic_task(&synth)?;
    let config = TrainConfig { epochs, max_len: 24, seed, ..TrainConfig::scratch() };
    let rows = ablate(&train_set, &test_set, &synth.vocab(), &config)?;
    print!("{}", render_ablation(&rows));
    Ok(())
}
