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

//! SemEval-2010 Task 8 distribution files.
//!
//! Each block of a distribution file looks like
//!
//! ```text
//! 1	"The <e1>kitchen</e1> is the last renovated part of the <e2>house</e2>."
//! Component-Whole(e1,e2)
//! Comment:
//!
//! ```
//!
//! Sentences are split on whitespace, and every entity tag also acts as a word
//! boundary, so `<e2>house</e2>.` yields the words `house` and `.`.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{RbertError, Result};

/// The nine relation families plus the artificial `Other` class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    CauseEffect,
    ComponentWhole,
    ContentContainer,
    EntityDestination,
    EntityOrigin,
    InstrumentAgency,
    MemberCollection,
    MessageTopic,
    ProductProducer,
    Other,
}

impl Family {
    /// The nine real relations, in the order they are usually listed.
    pub const RELATIONS: [Family; 9] = [
        Family::CauseEffect,
        Family::ComponentWhole,
        Family::ContentContainer,
        Family::EntityDestination,
        Family::EntityOrigin,
        Family::InstrumentAgency,
        Family::MemberCollection,
        Family::MessageTopic,
        Family::ProductProducer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CauseEffect => "Cause-Effect",
            Family::ComponentWhole => "Component-Whole",
            Family::ContentContainer => "Content-Container",
            Family::EntityDestination => "Entity-Destination",
            Family::EntityOrigin => "Entity-Origin",
            Family::InstrumentAgency => "Instrument-Agency",
            Family::MemberCollection => "Member-Collection",
            Family::MessageTopic => "Message-Topic",
            Family::ProductProducer => "Product-Producer",
            Family::Other => "Other",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::RELATIONS
            .iter()
            .copied()
            .chain(std::iter::once(Family::Other))
            .find(|f| f.name() == name)
    }

    pub fn is_other(self) -> bool {
        self == Family::Other
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// `(e1,e2)`
    Forward,
    /// `(e2,e1)`
    Backward,
    /// Only for `Other`.
    Undirected,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
            Direction::Undirected => Direction::Undirected,
        }
    }
}

/// A relation family together with its direction, e.g. `Cause-Effect(e2,e1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectionalLabel {
    family: Family,
    direction: Direction,
}

impl DirectionalLabel {
    pub const OTHER: DirectionalLabel = DirectionalLabel {
        family: Family::Other,
        direction: Direction::Undirected,
    };

    /// Builds a label, rejecting direction/family combinations that cannot occur.
    pub fn new(family: Family, direction: Direction) -> Result<Self> {
        if family.is_other() != (direction == Direction::Undirected) {
            return Err(RbertError::InvalidArgument(format!(
                "{family} cannot take direction {direction:?}"
            )));
        }
        Ok(DirectionalLabel { family, direction })
    }

    pub fn relation(family: Family, forward: bool) -> Self {
        assert!(!family.is_other(), "Other has no direction");
        DirectionalLabel {
            family,
            direction: if forward {
                Direction::Forward
            } else {
                Direction::Backward
            },
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Position of this label in [`LabelSpace::semeval`].
    pub fn class_index(&self) -> usize {
        LabelSpace::semeval()
            .index_of(self)
            .expect("every legal label is in the label space")
    }

    /// Same family, opposite direction. `Other` maps to itself.
    pub fn flipped(&self) -> Self {
        DirectionalLabel {
            family: self.family,
            direction: self.direction.flipped(),
        }
    }
}

impl fmt::Display for DirectionalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::Forward => write!(f, "{}(e1,e2)", self.family),
            Direction::Backward => write!(f, "{}(e2,e1)", self.family),
            Direction::Undirected => write!(f, "{}", self.family),
        }
    }
}

impl FromStr for DirectionalLabel {
    type Err = RbertError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || RbertError::InvalidArgument(format!("unknown relation label {s:?}"));
        let (name, direction) = if let Some(name) = s.strip_suffix("(e1,e2)") {
            (name, Direction::Forward)
        } else if let Some(name) = s.strip_suffix("(e2,e1)") {
            (name, Direction::Backward)
        } else {
            (s, Direction::Undirected)
        };
        let family = Family::from_name(name).ok_or_else(unknown)?;
        DirectionalLabel::new(family, direction).map_err(|_| unknown())
    }
}

/// The 19 directional labels, indexed lexicographically by rendered string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    labels: Vec<DirectionalLabel>,
}

impl LabelSpace {
    pub fn semeval() -> &'static LabelSpace {
        static SPACE: OnceLock<LabelSpace> = OnceLock::new();
        SPACE.get_or_init(|| {
            let mut labels: Vec<DirectionalLabel> = Family::RELATIONS
                .iter()
                .flat_map(|&f| {
                    [
                        DirectionalLabel::relation(f, true),
                        DirectionalLabel::relation(f, false),
                    ]
                })
                .chain(std::iter::once(DirectionalLabel::OTHER))
                .collect();
            labels.sort_by_key(|l| l.to_string());
            LabelSpace { labels }
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[DirectionalLabel] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> Option<DirectionalLabel> {
        self.labels.get(index).copied()
    }

    pub fn index_of(&self, label: &DirectionalLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn parse(&self, s: &str) -> Result<DirectionalLabel> {
        s.parse()
    }
}

/// Inclusive word-index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    pub id: u32,
    pub words: Vec<String>,
    pub e1: Span,
    pub e2: Span,
    pub label: DirectionalLabel,
    /// The trimmed text after `Comment:`; `None` when absent or empty.
    pub comment: Option<String>,
}

impl RelationInstance {
    /// Checks the structural invariants: spans in bounds, non-overlapping.
    pub fn validate(&self) -> Result<()> {
        let n = self.words.len();
        let bad = |message: String| RbertError::InvalidArgument(format!("instance {}: {message}", self.id));
        if self.id == 0 {
            return Err(bad("id must be positive".into()));
        }
        for (name, span) in [("e1", self.e1), ("e2", self.e2)] {
            if span.start > span.end || span.end >= n {
                return Err(bad(format!("{name} span {span:?} outside {n} words")));
            }
        }
        if self.e1.overlaps(&self.e2) {
            return Err(bad("entity spans overlap".into()));
        }
        Ok(())
    }

    pub fn entity_text(&self, span: Span) -> String {
        self.words[span.start..=span.end].join(" ")
    }

    /// Re-inserts the entity tags around the spans, words joined by single spaces.
    pub fn tagged_sentence(&self) -> String {
        let mut out = Vec::with_capacity(self.words.len());
        for (i, word) in self.words.iter().enumerate() {
            let mut w = String::new();
            if i == self.e1.start {
                w.push_str("<e1>");
            }
            if i == self.e2.start {
                w.push_str("<e2>");
            }
            w.push_str(word);
            if i == self.e1.end {
                w.push_str("</e1>");
            }
            if i == self.e2.end {
                w.push_str("</e2>");
            }
            out.push(w);
        }
        out.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `TRAIN_FILE.TXT`
    Train,
    /// `TEST_FILE_FULL.TXT`, which has the same layout as the training file.
    Test,
}

impl DatasetFormat {
    fn name(self) -> &'static str {
        match self {
            DatasetFormat::Train => "train",
            DatasetFormat::Test => "test",
        }
    }
}

const TAGS: [&str; 4] = ["<e1>", "</e1>", "<e2>", "</e2>"];

/// Splits a tagged sentence into words and entity spans.
fn parse_tagged_sentence(text: &str) -> std::result::Result<(Vec<String>, Span, Span), String> {
    let mut spaced = text.to_string();
    for tag in TAGS {
        spaced = spaced.replace(tag, &format!(" {tag} "));
    }

    let mut words = Vec::new();
    let mut open: [Option<usize>; 2] = [None, None];
    let mut spans: [Option<Span>; 2] = [None, None];
    let mut active: Option<usize> = None;

    for token in spaced.split_whitespace() {
        match token {
            "<e1>" | "<e2>" => {
                let which = usize::from(token == "<e2>");
                if active.is_some() {
                    return Err(format!("nested entity tag {token}"));
                }
                if open[which].is_some() || spans[which].is_some() {
                    return Err(format!("duplicate tag {token}"));
                }
                open[which] = Some(words.len());
                active = Some(which);
            }
            "</e1>" | "</e2>" => {
                let which = usize::from(token == "</e2>");
                if active != Some(which) {
                    return Err(format!("unmatched closing tag {token}"));
                }
                let start = open[which].take().expect("active tag was opened");
                if start == words.len() {
                    return Err(format!("empty entity before {token}"));
                }
                spans[which] = Some(Span::new(start, words.len() - 1));
                active = None;
            }
            word => words.push(word.to_string()),
        }
    }

    if let Some(which) = active {
        return Err(format!("missing </e{}>", which + 1));
    }
    match spans {
        [Some(e1), Some(e2)] => Ok((words, e1, e2)),
        [None, _] => Err("missing <e1>..</e1>".into()),
        [_, None] => Err("missing <e2>..</e2>".into()),
    }
}

/// Parses a SemEval-2010 Task 8 file into instances, in file order.
pub fn parse_dataset(content: &str, format: DatasetFormat) -> Result<Vec<RelationInstance>> {
    let lines: Vec<&str> = content.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    let mut i = 0;

    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let line_no = i + 1;
        let sentence_line = lines[i];
        let err = |line: usize, block: &str, message: String| RbertError::Parse {
            line,
            block: format!("{}:{block}", format.name()),
            message,
        };

        let (id_text, rest) = sentence_line
            .split_once('\t')
            .or_else(|| sentence_line.split_once(char::is_whitespace))
            .ok_or_else(|| err(line_no, "?", "expected `<id>\\t\"<sentence>\"`".into()))?;
        let id_text = id_text.trim();
        let id: u32 = id_text
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| err(line_no, id_text, format!("invalid id {id_text:?}")))?;
        let block = id.to_string();

        let quoted = rest.trim();
        let sentence = quoted
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| err(line_no, &block, "sentence must be enclosed in double quotes".into()))?;
        let (words, e1, e2) =
            parse_tagged_sentence(sentence).map_err(|m| err(line_no, &block, m))?;
        if e1.overlaps(&e2) {
            return Err(err(line_no, &block, "overlapping entity tags".into()));
        }
        if !seen.insert(id) {
            return Err(err(line_no, &block, format!("duplicate id {id}")));
        }

        i += 1;
        let label_line = lines.get(i).map(|l| l.trim()).unwrap_or("");
        if label_line.is_empty() || label_line.starts_with("Comment") {
            return Err(err(i + 1, &block, "missing relation label line".into()));
        }
        let label: DirectionalLabel = label_line
            .parse()
            .map_err(|_| err(i + 1, &block, format!("unknown relation label {label_line:?}")))?;
        i += 1;

        let mut comment = None;
        if let Some(rest) = lines.get(i).and_then(|l| l.trim_start().strip_prefix("Comment:")) {
            comment = Some(rest.trim().to_string()).filter(|c| !c.is_empty());
            i += 1;
        }
        if let Some(extra) = lines.get(i).filter(|l| !l.trim().is_empty()) {
            return Err(err(
                i + 1,
                &block,
                format!("expected blank line after block, found {extra:?}"),
            ));
        }

        instances.push(RelationInstance {
            id,
            words,
            e1,
            e2,
            label,
            comment,
        });
    }
    Ok(instances)
}

/// Renders instances back into the distribution layout, one block each.
pub fn render_dataset(instances: &[RelationInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&format!("{}\t\"{}\"\n{}\n", inst.id, inst.tagged_sentence(), inst.label));
        match &inst.comment {
            Some(c) if !c.is_empty() => out.push_str(&format!("Comment: {c}\n")),
            _ => out.push_str("Comment:\n"),
        }
        out.push('\n');
    }
    out
}

/// Renders `<id>\t<label>` lines in ascending id order.
pub fn write_predictions(predictions: &[(u32, DirectionalLabel)]) -> Result<String> {
    let mut sorted = predictions.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(RbertError::InvalidArgument(format!(
            "duplicate prediction id {}",
            w[0].0
        )));
    }
    let mut out = String::new();
    for (id, label) in sorted {
        out.push_str(&format!("{id}\t{label}\n"));
    }
    Ok(out)
}

/// Parses a prediction (or answer-key) file, preserving line order.
pub fn parse_predictions(text: &str) -> Result<Vec<(u32, DirectionalLabel)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| RbertError::Parse {
            line: n + 1,
            block: "predictions".into(),
            message,
        };
        let (id, label) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(format!("expected `<id>\\t<label>`, found {line:?}")))?;
        let id: u32 = id.parse().map_err(|_| err(format!("invalid id {id:?}")))?;
        let label: DirectionalLabel = label
            .trim()
            .parse()
            .map_err(|_| err(format!("unknown relation label {:?}", label.trim())))?;
        if !seen.insert(id) {
            return Err(err(format!("duplicate id {id}")));
        }
        out.push((id, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KITCHEN: &str = "1\t\"The <e1>kitchen</e1> is the last renovated part of the <e2>house</e2>.\"\nComponent-Whole(e1,e2)\nComment:\n\n";

    #[test]
    fn kitchen_house_block() {
        let parsed = parse_dataset(KITCHEN, DatasetFormat::Train).unwrap();
        assert_eq!(parsed.len(), 1);
        let inst = &parsed[0];
        assert_eq!(inst.entity_text(inst.e1), "kitchen");
        assert_eq!(inst.entity_text(inst.e2), "house");
        assert_eq!(inst.words.last().unwrap(), ".");
        assert_eq!(inst.label.family(), Family::ComponentWhole);
        assert_eq!(inst.label.direction(), Direction::Forward);
        assert_eq!(inst.comment, None);
    }

    #[test]
    fn minimal_other_block() {
        let parsed = parse_dataset("1\t\"<e1>A</e1> hit <e2>B</e2>.\"\nOther\n", DatasetFormat::Test).unwrap();
        assert_eq!(parsed[0].label, DirectionalLabel::OTHER);
        assert_eq!(parsed[0].e1, Span::new(0, 0));
        assert_eq!(parsed[0].e2, Span::new(2, 2));
        assert!(parsed[0].comment.is_none());
    }

    #[test]
    fn multiword_entities_and_crlf() {
        let text = "7\t\"Put the <e1>audio system</e1> into the <e2>car trunk</e2> now.\"\r\nEntity-Destination(e1,e2)\r\nComment: moved\r\n\r\n";
        let inst = &parse_dataset(text, DatasetFormat::Train).unwrap()[0];
        assert_eq!(inst.e1, Span::new(2, 3));
        assert_eq!(inst.e2, Span::new(6, 7));
        assert_eq!(inst.comment.as_deref(), Some("moved"));
    }

    fn expect_parse_error(text: &str, line: usize) {
        match parse_dataset(text, DatasetFormat::Train) {
            Err(RbertError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_blocks() {
        expect_parse_error("1\t\"<e1>A hit <e2>B</e2>.\"\nOther\n", 1);
        expect_parse_error("1\t\"<e1>A</e1> hit <e2>B</e2>.\"\n\n", 2);
        expect_parse_error("1\t\"<e1>A</e1> hit <e2>B</e2>.\"\nFoo-Bar(e1,e2)\n", 2);
        expect_parse_error("1\t\"<e1>A <e2>hit</e2> B</e1>.\"\nOther\n", 1);
        expect_parse_error("1\t\"<e1></e1> hit <e2>B</e2>.\"\nOther\n", 1);
        expect_parse_error(
            "1\t\"<e1>A</e1> hit <e2>B</e2>.\"\nOther\n\n1\t\"<e1>C</e1> hit <e2>D</e2>.\"\nOther\n",
            4,
        );
    }

    #[test]
    fn error_names_block() {
        let err = parse_dataset("42\t\"<e1>A hit <e2>B</e2>.\"\nOther\n", DatasetFormat::Train).unwrap_err();
        assert!(err.to_string().contains("42"), "{err}");
    }

    #[test]
    fn label_space_is_lexicographic() {
        let space = LabelSpace::semeval();
        assert_eq!(space.len(), 19);
        let rendered: Vec<String> = space.labels().iter().map(|l| l.to_string()).collect();
        let mut sorted = rendered.clone();
        sorted.sort();
        assert_eq!(rendered, sorted);
        assert_eq!(space.get(0).unwrap().to_string(), "Cause-Effect(e1,e2)");
        for (i, l) in space.labels().iter().enumerate() {
            assert_eq!(l.class_index(), i);
            assert_eq!(space.parse(&l.to_string()).unwrap(), *l);
        }
    }

    #[test]
    fn label_parsing() {
        assert_eq!("Other".parse::<DirectionalLabel>().unwrap(), DirectionalLabel::OTHER);
        let ce: DirectionalLabel = "Cause-Effect(e2,e1)".parse().unwrap();
        assert_eq!(ce.family(), Family::CauseEffect);
        assert_eq!(ce.direction(), Direction::Backward);
        assert!("Other(e1,e2)".parse::<DirectionalLabel>().is_err());
        assert!("Cause-Effect".parse::<DirectionalLabel>().is_err());
        assert!(DirectionalLabel::new(Family::Other, Direction::Forward).is_err());
    }

    #[test]
    fn predictions_sorted_and_unique() {
        assert_eq!(write_predictions(&[(8001, DirectionalLabel::OTHER)]).unwrap(), "8001\tOther\n");
        let ce = DirectionalLabel::relation(Family::CauseEffect, true);
        let text = write_predictions(&[(3, ce), (1, DirectionalLabel::OTHER)]).unwrap();
        assert_eq!(text, "1\tOther\n3\tCause-Effect(e1,e2)\n");
        assert!(write_predictions(&[(3, ce), (3, ce)]).is_err());
        assert!(parse_predictions("1\tOther\n1\tOther\n").is_err());
    }

    #[test]
    fn tagged_sentence_round_trip() {
        let inst = &parse_dataset(KITCHEN, DatasetFormat::Train).unwrap()[0];
        assert_eq!(
            inst.tagged_sentence(),
            "The <e1>kitchen</e1> is the last renovated part of the <e2>house</e2> ."
        );
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn label() -> impl Strategy<Value = DirectionalLabel> {
            (0..19usize).prop_map(|i| LabelSpace::semeval().get(i).unwrap())
        }

        proptest! {
            #[test]
            fn prediction_file_round_trip(entries in proptest::collection::btree_map(1u32..20_000, label(), 0..50)) {
                let preds: Vec<_> = entries.into_iter().collect();
                let text = write_predictions(&preds).unwrap();
                prop_assert_eq!(parse_predictions(&text).unwrap(), preds);
            }

            #[test]
            fn tagged_round_trip(
                words in proptest::collection::vec("[a-z]{1,6}", 3..12),
                a in 0usize..100, b in 0usize..100, swap: bool,
            ) {
                let n = words.len();
                let (x, y) = (a % (n - 1), 0);
                let first = Span::new(x, x);
                let second_start = x + 1 + (b % (n - x - 1));
                let second = Span::new(second_start, second_start + y);
                let (e1, e2) = if swap { (second, first) } else { (first, second) };
                let inst = RelationInstance { id: 5, words, e1, e2, label: DirectionalLabel::OTHER, comment: None };
                let block = format!("5\t\"{}\"\nOther\nComment:\n\n", inst.tagged_sentence());
                let parsed = parse_dataset(&block, DatasetFormat::Train).unwrap();
                prop_assert_eq!(&parsed[0].words, &inst.words);
                prop_assert_eq!(parsed[0].e1, inst.e1);
                prop_assert_eq!(parsed[0].e2, inst.e2);
            }
        }
    }
}
