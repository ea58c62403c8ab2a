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

//! Parsing the bundled SemEval-format sample and the synthetic corpus.

use std::path::Path;

use proptest::prelude::*;
use rbert::semeval::{render_dataset, Span};
use rbert::tokenizer::{encode_all, EncodeOptions, E1_MARKER, E2_MARKER};
use rbert::{make_synthetic_task, parse_dataset, DatasetFormat, SynthConfig, Vocab};

fn sample() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/semeval_sample.txt")).unwrap()
}

#[test]
fn sample_parses_to_twelve_instances() {
    let instances = parse_dataset(&sample(), DatasetFormat::Train).unwrap();
    assert_eq!(instances.len(), 12);
    let ids: Vec<u32> = instances.iter().map(|i| i.id).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>());
    for inst in &instances {
        inst.validate().unwrap();
    }
    let first = &instances[0];
    assert_eq!(first.entity_text(first.e1), "kitchen");
    assert_eq!(first.entity_text(first.e2), "house");
    let six = &instances[5];
    assert_eq!(six.entity_text(six.e1), "box of chocolates");
    assert_eq!(six.e1, Span::new(1, 3));
    let nine = &instances[8];
    assert_eq!(nine.entity_text(nine.e2), "history of the railway");
}

#[test]
fn sample_spans_round_trip() {
    let instances = parse_dataset(&sample(), DatasetFormat::Train).unwrap();
    let again = parse_dataset(&render_dataset(&instances), DatasetFormat::Train).unwrap();
    assert_eq!(again, instances);
    let crlf = sample().replace('\n', "\r\n");
    assert_eq!(parse_dataset(&crlf, DatasetFormat::Test).unwrap(), instances);
}

#[test]
fn sample_vocab_covers_the_sample() {
    let instances = parse_dataset(&sample(), DatasetFormat::Train).unwrap();
    let vocab = Vocab::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/semeval_sample_vocab.txt")).unwrap();
    assert_eq!(vocab.to_file_contents(), Vocab::from_instances(&instances).unwrap().to_file_contents());
    for enc in encode_all(&instances, &vocab, &EncodeOptions::new(40)).unwrap() {
        assert!(!enc.input_ids.contains(&vocab.unk_id()), "instance {}", enc.id);
    }
}

#[test]
fn synthetic_files_round_trip() {
    let (train, test) = make_synthetic_task(&SynthConfig::default()).unwrap();
    for split in [&train, &test] {
        assert_eq!(&parse_dataset(&render_dataset(split), DatasetFormat::Train).unwrap(), split);
    }
}

proptest! {
    #[test]
    fn every_marked_encoding_has_two_of_each_marker(seed in 0u64..1000, families in 2usize..=9) {
        let config = SynthConfig { seed, num_families: families, train_size: 30, test_size: 10, ..SynthConfig::default() };
        let (train, _) = make_synthetic_task(&config).unwrap();
        let vocab = config.vocab();
        let (e1, e2) = (vocab.id(E1_MARKER).unwrap(), vocab.id(E2_MARKER).unwrap());
        for enc in encode_all(&train, &vocab, &EncodeOptions::new(48)).unwrap() {
            prop_assert_eq!(enc.input_ids.iter().filter(|&&t| t == e1).count(), 2);
            prop_assert_eq!(enc.input_ids.iter().filter(|&&t| t == e2).count(), 2);
            prop_assert_eq!(enc.input_ids[enc.e1_range.0 - 1], e1);
            prop_assert_eq!(enc.input_ids[enc.e1_range.1 + 1], e1);
            prop_assert_eq!(enc.input_ids[enc.e2_range.0 - 1], e2);
            prop_assert_eq!(enc.input_ids[enc.e2_range.1 + 1], e2);
        }
        for enc in encode_all(&train, &vocab, &EncodeOptions::new(48).without_markers()).unwrap() {
            prop_assert!(!enc.input_ids.contains(&e1) && !enc.input_ids.contains(&e2));
        }
    }
}
