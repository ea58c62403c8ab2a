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

//! Architectural invariants of the model, checked on random inputs.

use proptest::prelude::*;
use rbert::model::{Entity, HEAD_WENT};
use rbert::nn::Mode;
use rbert::tokenizer::{encode_with, pad_batch, EncodeOptions};
use rbert::{make_synthetic_task, ModelConfig, RBertModel, SynthConfig, Variant};

fn config(variant: Variant, vocab_size: usize) -> ModelConfig {
    ModelConfig {
        vocab_size,
        max_positions: 24,
        hidden_size: 8,
        num_layers: 1,
        num_heads: 2,
        ff_size: 16,
        num_labels: 19,
        dropout: 0.1,
        variant,
    }
}

fn variants() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Full), Just(Variant::NoSep), Just(Variant::NoEnt), Just(Variant::NoSepNoEnt)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_are_distributions(variant in variants(), seed in any::<u64>(), picks in prop::collection::vec(0usize..600, 1..5)) {
        let synth = SynthConfig::default();
        let (train, _) = make_synthetic_task(&synth).unwrap();
        let vocab = synth.vocab();
        let mut options = EncodeOptions::new(24);
        options.markers = variant.uses_markers();
        let encoded: Vec<_> = picks.iter().map(|&i| encode_with(&train[i], &vocab, &options).unwrap()).collect();
        let batch = pad_batch(&encoded.iter().collect::<Vec<_>>(), vocab.pad_id()).unwrap();
        let model = RBertModel::new(config(variant, vocab.len()), seed).unwrap();
        let out = model.forward(&batch, Mode::Eval).unwrap();
        for row in out.probabilities.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-6);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn padding_does_not_change_outputs(seed in any::<u64>(), a in 0usize..600, b in 0usize..600) {
        let synth = SynthConfig::default();
        let (train, _) = make_synthetic_task(&synth).unwrap();
        let vocab = synth.vocab();
        let options = EncodeOptions::new(24);
        let ea = encode_with(&train[a], &vocab, &options).unwrap();
        let eb = encode_with(&train[b], &vocab, &options).unwrap();
        let model = RBertModel::new(config(Variant::Full, vocab.len()), seed).unwrap();
        let alone = model.forward(&pad_batch(&[&ea], vocab.pad_id()).unwrap(), Mode::Eval).unwrap();
        let paired = model.forward(&pad_batch(&[&ea, &eb], vocab.pad_id()).unwrap(), Mode::Eval).unwrap();
        prop_assert_eq!(alone.logits.row(0), paired.logits.row(0));
    }

    #[test]
    fn marker_free_variant_ignores_spans(seed in any::<u64>(), i in 0usize..600, s1 in 0usize..5, s2 in 0usize..5) {
        let synth = SynthConfig::default();
        let (train, _) = make_synthetic_task(&synth).unwrap();
        let vocab = synth.vocab();
        let original = train[i].clone();
        let n = original.words.len() - 1; // keep the final period out of the spans
        let (p, q) = (s1 % n, (s1 + 1 + s2 % (n - 1)) % n);
        prop_assume!(p != q);
        let mut moved = original.clone();
        moved.e1 = rbert::semeval::Span::new(p, p);
        moved.e2 = rbert::semeval::Span::new(q, q);
        let options = EncodeOptions::new(24).without_markers();
        let model = RBertModel::new(config(Variant::NoSepNoEnt, vocab.len()), seed).unwrap();
        let run = |inst| {
            let enc = encode_with(inst, &vocab, &options).unwrap();
            model.forward(&pad_batch(&[&enc], vocab.pad_id()).unwrap(), Mode::Eval).unwrap().logits
        };
        prop_assert_eq!(run(&original), run(&moved));
    }
}

#[test]
fn entity_paths_share_one_parameter() {
    for variant in [Variant::Full, Variant::NoSep] {
        let model = RBertModel::new(config(variant, 30), 1).unwrap();
        let first = model.head.entity_projection(Entity::First).unwrap();
        let second = model.head.entity_projection(Entity::Second).unwrap();
        assert_eq!(first, second);
        assert_eq!(model.store.iter().filter(|p| p.name == HEAD_WENT).count(), 1);
    }
    for variant in [Variant::NoEnt, Variant::NoSepNoEnt] {
        let model = RBertModel::new(config(variant, 30), 1).unwrap();
        assert!(model.head.entity_projection(Entity::First).is_none());
        assert!(model.store.find(HEAD_WENT).is_none());
    }
}
