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

//! Relation classification with an entity-aware transformer head.
//!
//! The pipeline:
//!
//! 1. [`semeval`] parses SemEval-2010 Task 8 files into [`RelationInstance`]s.
//! 2. [`tokenizer`] inserts `$ … $` around the first entity and `# … #`
//!    around the second, runs WordPiece and records the entity subword ranges.
//! 3. [`model`] encodes the sequence, averages the hidden states over each
//!    entity, projects the `[CLS]` state and both entity averages (the two
//!    entity projections share one weight matrix), concatenates and classifies.
//! 4. [`trainer`] fits the model with cross-entropy and Adam.
//! 5. [`scorer`] computes the directional macro-F1 over the nine relations.
//!
//! [`synth`] generates a small task on which the entity markers are necessary,
//! and [`cli`] wires everything into the `rbert` command.

pub mod cli;
pub mod error;
pub mod model;
pub mod nn;
pub mod scorer;
pub mod semeval;
pub mod synth;
pub mod tokenizer;
pub mod trainer;

pub use error::{RbertError, Result};
pub use model::{ModelConfig, RBertModel, Variant};
pub use nn::softmax_cross_entropy;
pub use scorer::{score, ScoreReport};
pub use semeval::{parse_dataset, DatasetFormat, DirectionalLabel, Family, LabelSpace, RelationInstance};
pub use synth::{make_synthetic_task, SynthConfig};
pub use tokenizer::{encode, pad_batch, Batch, EncodedExample, Vocab};
pub use trainer::{evaluate, train, TrainConfig};
