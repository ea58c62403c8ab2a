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

//! Synthetic entity-relation task where the markers are the only way to tell
//! which tokens are the entities.
//!
//! Every sentence contains one "relation word" for each family in use, two
//! neutral candidate words and some filler, in random order. The label is
//! decided by which two positions get marked:
//!
//! * family `r`, `(e1,e2)`: e1 is the family-`r` word, e2 a neutral word;
//! * family `r`, `(e2,e1)`: e1 is a neutral word, e2 the family-`r` word;
//! * `Other`: both entities are the neutral words.
//!
//! The unmarked word sequence is drawn independently of the label, so a model
//! that sees neither markers nor entity positions can do no better than the
//! label prior.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RbertError, Result};
use crate::semeval::{DirectionalLabel, Family, RelationInstance, Span};
use crate::tokenizer::{Vocab, CLS, E1_MARKER, E2_MARKER, PAD, SEP, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    /// Number of relation families, taken from the front of [`Family::RELATIONS`].
    pub num_families: usize,
    /// Surface words per family.
    pub words_per_family: usize,
    /// Size of the neutral-candidate pool.
    pub neutral_words: usize,
    /// Size of the filler pool.
    pub filler_words: usize,
    /// Filler words per sentence.
    pub fillers_per_sentence: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_families: 6,
            words_per_family: 2,
            neutral_words: 6,
            filler_words: 8,
            fillers_per_sentence: 3,
            train_size: 600,
            test_size: 200,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn num_classes(&self) -> usize {
        2 * self.num_families + 1
    }

    pub fn families(&self) -> &'static [Family] {
        &Family::RELATIONS[..self.num_families]
    }

    fn relation_word(family: usize, variant: usize) -> String {
        format!("rel{family}v{variant}")
    }

    fn neutral_word(i: usize) -> String {
        format!("cand{i}")
    }

    fn filler_word(i: usize) -> String {
        format!("fill{i}")
    }

    /// Every word the generator can emit, after the reserved tokens.
    pub fn vocab(&self) -> Vocab {
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP, E1_MARKER, E2_MARKER, "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for f in 0..self.num_families {
            for v in 0..self.words_per_family {
                tokens.push(Self::relation_word(f, v));
            }
        }
        tokens.extend((0..self.neutral_words).map(Self::neutral_word));
        tokens.extend((0..self.filler_words).map(Self::filler_word));
        Vocab::from_tokens(tokens).expect("generated vocabulary has the reserved tokens")
    }

    /// Labels in class order: each family forward, each family backward, Other.
    pub fn labels(&self) -> Vec<DirectionalLabel> {
        let mut labels: Vec<_> = self
            .families()
            .iter()
            .map(|&f| DirectionalLabel::relation(f, true))
            .collect();
        labels.extend(self.families().iter().map(|&f| DirectionalLabel::relation(f, false)));
        labels.push(DirectionalLabel::OTHER);
        labels
    }
}

/// Generates `(train, test)`. Labels cycle through all `2F+1` classes, so
/// every split is balanced up to one example per class.
pub fn make_synthetic_task(config: &SynthConfig) -> Result<(Vec<RelationInstance>, Vec<RelationInstance>)> {
    if !(2..=Family::RELATIONS.len()).contains(&config.num_families) {
        return Err(RbertError::Config(format!(
            "num_families must be in 2..=9, got {}",
            config.num_families
        )));
    }
    if config.words_per_family == 0 || config.neutral_words < 2 || config.filler_words == 0 {
        return Err(RbertError::Config(
            "need at least one word per family, two neutral words and one filler word".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let labels = config.labels();
    let make_split = |size: usize, first_id: u32, rng: &mut ChaCha8Rng| {
        let mut split: Vec<RelationInstance> = (0..size)
            .map(|i| generate_one(config, labels[i % labels.len()], rng))
            .collect();
        split.shuffle(rng);
        for (i, inst) in split.iter_mut().enumerate() {
            inst.id = first_id + i as u32;
        }
        split
    };
    let train = make_split(config.train_size, 1, &mut rng);
    let test = make_split(config.test_size, config.train_size as u32 + 1, &mut rng);
    Ok((train, test))
}

fn generate_one(config: &SynthConfig, label: DirectionalLabel, rng: &mut ChaCha8Rng) -> RelationInstance {
    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Relation(usize),
        Neutral(usize),
        Filler,
    }

    let mut slots: Vec<Slot> = (0..config.num_families).map(Slot::Relation).collect();
    slots.push(Slot::Neutral(0));
    slots.push(Slot::Neutral(1));
    slots.extend(std::iter::repeat_n(Slot::Filler, config.fillers_per_sentence));
    slots.shuffle(rng);

    let neutral: Vec<usize> = rand::seq::index::sample(rng, config.neutral_words, 2).into_vec();
    let mut words: Vec<String> = slots
        .iter()
        .map(|slot| match *slot {
            Slot::Relation(f) => SynthConfig::relation_word(f, rng.gen_range(0..config.words_per_family)),
            Slot::Neutral(k) => SynthConfig::neutral_word(neutral[k]),
            Slot::Filler => SynthConfig::filler_word(rng.gen_range(0..config.filler_words)),
        })
        .collect();
    words.push(".".into());

    let position = |slot: Slot| slots.iter().position(|&s| s == slot).expect("slot present");
    let neutral_pick = Slot::Neutral(rng.gen_range(0..2));
    let (e1, e2) = match label.family() {
        Family::Other => {
            let first = rng.gen_range(0..2);
            (position(Slot::Neutral(first)), position(Slot::Neutral(1 - first)))
        }
        family => {
            let f = config
                .families()
                .iter()
                .position(|&x| x == family)
                .expect("label family in use");
            let rel = position(Slot::Relation(f));
            let other = position(neutral_pick);
            if label.direction() == crate::semeval::Direction::Forward {
                (rel, other)
            } else {
                (other, rel)
            }
        }
    };
    RelationInstance {
        id: 0,
        words,
        e1: Span::new(e1, e1),
        e2: Span::new(e2, e2),
        label,
        comment: None,
    }
}

/// True when the word is one of the generator's entity candidates.
pub fn is_entity_candidate(word: &str) -> bool {
    word.starts_with("rel") || word.starts_with("cand")
}
