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

//! Directional macro-F1 over the nine relation families, `Other` excluded.
//!
//! For each family, a prediction counts towards `predicted` and a gold label
//! towards `actual` whatever its direction; only a prediction with the right
//! family *and* direction counts as correct.

use std::collections::HashMap;
use std::fs;
use std::ops::AddAssign;
use std::path::Path;

use crate::error::{RbertError, Result};
use crate::semeval::{parse_predictions, DirectionalLabel, Family};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FamilyCounts {
    pub exact_correct: usize,
    pub predicted: usize,
    pub actual: usize,
}

impl AddAssign for FamilyCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.exact_correct += rhs.exact_correct;
        self.predicted += rhs.predicted;
        self.actual += rhs.actual;
    }
}

/// Counts behind the metric. Indexed like [`Family::RELATIONS`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionStats {
    pub families: [FamilyCounts; 9],
    pub other: FamilyCounts,
}

impl ConfusionStats {
    fn slot(&mut self, family: Family) -> &mut FamilyCounts {
        match Family::RELATIONS.iter().position(|&f| f == family) {
            Some(i) => &mut self.families[i],
            None => &mut self.other,
        }
    }

    pub fn record(&mut self, gold: DirectionalLabel, pred: DirectionalLabel) {
        self.slot(gold.family()).actual += 1;
        self.slot(pred.family()).predicted += 1;
        if gold == pred {
            self.slot(gold.family()).exact_correct += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.families.iter().map(|c| c.actual).sum::<usize>() + self.other.actual
    }

    pub fn family_scores(&self) -> Vec<FamilyScore> {
        Family::RELATIONS
            .iter()
            .zip(&self.families)
            .map(|(&family, &counts)| FamilyScore::from_counts(family, counts))
            .collect()
    }

    /// Mean F1 (as a percentage) over families seen in gold or predictions.
    pub fn macro_f1(&self) -> f64 {
        let scores: Vec<f64> = self
            .family_scores()
            .iter()
            .filter(|s| s.counts.actual > 0 || s.counts.predicted > 0)
            .map(|s| s.f1)
            .collect();
        if scores.is_empty() {
            return 0.0;
        }
        100.0 * scores.iter().sum::<f64>() / scores.len() as f64
    }
}

impl AddAssign for ConfusionStats {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.families.iter_mut().zip(rhs.families) {
            *a += b;
        }
        self.other += rhs.other;
    }
}

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyScore {
    pub family: Family,
    pub counts: FamilyCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl FamilyScore {
    fn from_counts(family: Family, counts: FamilyCounts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(counts.exact_correct, counts.predicted);
        let recall = ratio(counts.exact_correct, counts.actual);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        FamilyScore {
            family,
            counts,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub stats: ConfusionStats,
    pub per_family: Vec<FamilyScore>,
    /// Percentage in `[0, 100]`.
    pub macro_f1: f64,
}

impl ScoreReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("relation                 correct  predicted  actual       P       R      F1\n");
        for s in &self.per_family {
            out.push_str(&format!(
                "{:<24} {:>7}  {:>9}  {:>6}  {:>6}  {:>6}  {:>6}\n",
                s.family.name(),
                s.counts.exact_correct,
                s.counts.predicted,
                s.counts.actual,
                format_percent(100.0 * s.precision),
                format_percent(100.0 * s.recall),
                format_percent(100.0 * s.f1),
            ));
        }
        let o = self.stats.other;
        out.push_str(&format!(
            "{:<24} {:>7}  {:>9}  {:>6}  (not averaged)\n",
            "Other", o.exact_correct, o.predicted, o.actual
        ));
        let excluded: Vec<&str> = self
            .per_family
            .iter()
            .filter(|s| s.counts.actual == 0 && s.counts.predicted == 0)
            .map(|s| s.family.name())
            .collect();
        if !excluded.is_empty() {
            out.push_str(&format!(
                "families absent from gold and predictions, excluded from the average: {}\n",
                excluded.join(", ")
            ));
        }
        out.push_str(&format!(
            "macro-averaged F1 (9 relations, directional, Other excluded): {}\n",
            format_percent(self.macro_f1)
        ));
        out
    }
}

/// Two decimals, halves rounded away from zero.
pub fn format_percent(value: f64) -> String {
    format!("{:.2}", (value * 100.0).round() / 100.0)
}

/// Scores predictions against gold labels. Both lists must cover the same ids.
pub fn score(gold: &[(u32, DirectionalLabel)], pred: &[(u32, DirectionalLabel)]) -> Result<ScoreReport> {
    let predictions: HashMap<u32, DirectionalLabel> = pred.iter().copied().collect();
    if predictions.len() != pred.len() {
        return Err(RbertError::Score("duplicate id in predictions".into()));
    }
    let mut gold_ids = std::collections::HashSet::with_capacity(gold.len());
    let mut stats = ConfusionStats::default();
    for &(id, g) in gold {
        if !gold_ids.insert(id) {
            return Err(RbertError::Score(format!("duplicate id {id} in gold labels")));
        }
        let p = predictions
            .get(&id)
            .ok_or_else(|| RbertError::Score(format!("missing prediction for id {id}")))?;
        stats.record(g, *p);
    }
    if let Some((id, _)) = pred.iter().find(|(id, _)| !gold_ids.contains(id)) {
        return Err(RbertError::Score(format!("prediction for id {id} has no gold label")));
    }
    Ok(ScoreReport {
        per_family: stats.family_scores(),
        macro_f1: stats.macro_f1(),
        stats,
    })
}

/// Macro-F1 a predictor would get, in expectation, if it drew its labels
/// independently of the gold labels with the same label frequencies as
/// `pred`. Expected counts are plugged into the per-family formulas.
pub fn chance_macro_f1(gold: &[DirectionalLabel], pred: &[DirectionalLabel]) -> f64 {
    let n = gold.len() as f64;
    if gold.is_empty() {
        return 0.0;
    }
    let count = |labels: &[DirectionalLabel], want: &dyn Fn(&DirectionalLabel) -> bool| {
        labels.iter().filter(|l| want(l)).count() as f64
    };
    let mut total = 0.0;
    let mut used = 0;
    for family in Family::RELATIONS {
        let actual = count(gold, &|l| l.family() == family);
        let predicted = count(pred, &|l| l.family() == family);
        if actual == 0.0 && predicted == 0.0 {
            continue;
        }
        used += 1;
        let expected_correct: f64 = [true, false]
            .iter()
            .map(|&fwd| {
                let label = DirectionalLabel::relation(family, fwd);
                count(gold, &|l| *l == label) * count(pred, &|l| *l == label) / n
            })
            .sum();
        let p = if predicted > 0.0 { expected_correct / predicted } else { 0.0 };
        let r = if actual > 0.0 { expected_correct / actual } else { 0.0 };
        if p + r > 0.0 {
            total += 2.0 * p * r / (p + r);
        }
    }
    if used == 0 {
        0.0
    } else {
        100.0 * total / used as f64
    }
}

/// Reads two `<id>\t<label>` files and renders the report.
pub fn score_files(gold_path: impl AsRef<Path>, pred_path: impl AsRef<Path>) -> Result<String> {
    let read = |p: &Path| -> Result<Vec<(u32, DirectionalLabel)>> {
        let text = fs::read_to_string(p).map_err(|e| RbertError::io(p, e))?;
        let parsed = parse_predictions(&text)?;
        if parsed.is_empty() {
            return Err(RbertError::Score(format!("{} contains no labels", p.display())));
        }
        Ok(parsed)
    };
    let gold = read(gold_path.as_ref())?;
    let pred = read(pred_path.as_ref())?;
    Ok(score(&gold, &pred)?.render())
}
