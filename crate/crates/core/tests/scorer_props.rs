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

//! Property tests for the directional macro-F1 scorer.

mod common;

use proptest::prelude::*;
use rbert::scorer::{chance_macro_f1, score, ConfusionStats};
use rbert::{DirectionalLabel, LabelSpace};

fn labels(max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..19usize, 0..19usize), 1..max)
}

type Labeled = Vec<(u32, DirectionalLabel)>;

fn to_pairs(idx: &[(usize, usize)]) -> (Labeled, Labeled) {
    let space = LabelSpace::semeval();
    let gold = idx.iter().enumerate().map(|(i, (g, _))| (i as u32 + 1, space.get(*g).unwrap())).collect();
    let pred = idx.iter().enumerate().map(|(i, (_, p))| (i as u32 + 1, space.get(*p).unwrap())).collect();
    (gold, pred)
}

fn as_strings(v: &[(u32, DirectionalLabel)]) -> Vec<(u32, String)> {
    v.iter().map(|(id, l)| (*id, l.to_string())).collect()
}

proptest! {
    #[test]
    fn matches_brute_force_reference(idx in labels(80)) {
        let (gold, pred) = to_pairs(&idx);
        let lib = score(&gold, &pred).unwrap().macro_f1;
        let reference = common::reference_macro_f1(&as_strings(&gold), &as_strings(&pred));
        prop_assert!((lib - reference).abs() < 1e-9, "{lib} vs {reference}");
    }

    #[test]
    fn order_does_not_matter(idx in labels(60), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (gold, pred) = to_pairs(&idx);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut g2, mut p2) = (gold.clone(), pred.clone());
        g2.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        let a = score(&gold, &pred).unwrap();
        let b = score(&g2, &p2).unwrap();
        prop_assert_eq!(a.macro_f1, b.macro_f1);
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn flipping_every_direction_is_symmetric(idx in labels(60)) {
        let (gold, pred) = to_pairs(&idx);
        let flip = |v: &[(u32, DirectionalLabel)]| -> Vec<_> { v.iter().map(|(id, l)| (*id, l.flipped())).collect() };
        let a = score(&gold, &pred).unwrap().macro_f1;
        let b = score(&flip(&gold), &flip(&pred)).unwrap().macro_f1;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bounded_and_perfect_only_when_equal(idx in labels(60)) {
        let (gold, pred) = to_pairs(&idx);
        let f = score(&gold, &pred).unwrap().macro_f1;
        prop_assert!((0.0..=100.0).contains(&f));
        prop_assert_eq!(score(&gold, &gold).unwrap().macro_f1, if gold.iter().any(|(_, l)| !l.family().is_other()) { 100.0 } else { 0.0 });
        let families_covered = pred.iter().all(|(_, p)| p.family().is_other() || gold.iter().any(|(_, g)| g.family() == p.family()));
        if families_covered && f == 100.0 {
            // a perfect score only arises from matching every relation label
            for ((_, g), (_, p)) in gold.iter().zip(&pred) {
                prop_assert!(g == p || (g.family().is_other() && p.family().is_other()));
            }
        }
    }

    #[test]
    fn counts_are_additive(a in labels(40), b in labels(40)) {
        let stats = |idx: &[(usize, usize)]| {
            let (gold, pred) = to_pairs(idx);
            let mut s = ConfusionStats::default();
            for ((_, g), (_, p)) in gold.iter().zip(&pred) {
                s.record(*g, *p);
            }
            s
        };
        let mut merged = stats(&a);
        merged += stats(&b);
        let joined: Vec<_> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(merged, stats(&joined));
        for (fam, counts) in merged.families.iter().enumerate() {
            prop_assert!(counts.exact_correct <= counts.predicted.min(counts.actual), "family {fam}");
        }
        let actual: usize = merged.families.iter().map(|c| c.actual).sum::<usize>() + merged.other.actual;
        prop_assert_eq!(actual, joined.len());
    }

    #[test]
    fn chance_level_is_bounded(idx in labels(60)) {
        let (gold, pred) = to_pairs(&idx);
        let g: Vec<_> = gold.iter().map(|(_, l)| *l).collect();
        let p: Vec<_> = pred.iter().map(|(_, l)| *l).collect();
        let c = chance_macro_f1(&g, &p);
        prop_assert!((0.0..=100.0).contains(&c));
    }
}

#[test]
fn reference_agrees_on_fixture() {
    let gold: Vec<(u32, String)> = ["Cause-Effect(e1,e2)", "Cause-Effect(e2,e1)", "Component-Whole(e1,e2)", "Other"]
        .iter()
        .enumerate()
        .map(|(i, l)| (i as u32 + 1, l.to_string()))
        .collect();
    let pred: Vec<(u32, String)> = ["Cause-Effect(e1,e2)", "Cause-Effect(e1,e2)", "Component-Whole(e1,e2)", "Cause-Effect(e1,e2)"]
        .iter()
        .enumerate()
        .map(|(i, l)| (i as u32 + 1, l.to_string()))
        .collect();
    assert!((common::reference_macro_f1(&gold, &pred) - 70.0).abs() < 1e-12);
    assert!((common::library_macro_f1(&gold, &pred) - 70.0).abs() < 1e-12);
}
