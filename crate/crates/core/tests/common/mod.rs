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

//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

/// The nine directed relation families, spelled out independently of the
/// library's own tables.
pub const FAMILIES: [&str; 9] = [
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
];

/// All 19 label strings.
pub fn all_labels() -> Vec<String> {
    let mut labels: Vec<String> = FAMILIES
        .iter()
        .flat_map(|f| [format!("{f}(e1,e2)"), format!("{f}(e2,e1)")])
        .collect();
    labels.push("Other".to_string());
    labels
}

pub fn random_label_strings<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let labels = all_labels();
    (0..n).map(|_| labels[rng.gen_range(0..labels.len())].clone()).collect()
}

/// Brute-force directional macro-F1 over label strings: counts each family by
/// scanning every pair, then averages over families seen in gold or pred.
pub fn reference_macro_f1(gold: &[(u32, String)], pred: &[(u32, String)]) -> f64 {
    let pred_by_id: HashMap<u32, &str> = pred.iter().map(|(id, l)| (*id, l.as_str())).collect();
    let family_of = |label: &str| label.split('(').next().unwrap().to_string();
    let mut sum = 0.0;
    let mut used = 0usize;
    for family in FAMILIES {
        let (mut correct, mut predicted, mut actual) = (0usize, 0usize, 0usize);
        for (id, g) in gold {
            let p = pred_by_id[id];
            if family_of(g) == family {
                actual += 1;
            }
            if family_of(p) == family {
                predicted += 1;
            }
            if family_of(g) == family && g == p {
                correct += 1;
            }
        }
        if actual == 0 && predicted == 0 {
            continue;
        }
        used += 1;
        let precision = if predicted == 0 { 0.0 } else { correct as f64 / predicted as f64 };
        let recall = if actual == 0 { 0.0 } else { correct as f64 / actual as f64 };
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    if used == 0 {
        0.0
    } else {
        100.0 * sum / used as f64
    }
}

/// Parses label strings with the library and scores them.
pub fn library_macro_f1(gold: &[(u32, String)], pred: &[(u32, String)]) -> f64 {
    let parse = |v: &[(u32, String)]| -> Vec<(u32, rbert::DirectionalLabel)> {
        v.iter().map(|(id, l)| (*id, l.parse().unwrap())).collect()
    };
    rbert::score(&parse(gold), &parse(pred)).unwrap().macro_f1
}
