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

//! WordPiece tokenization with entity-marker insertion.
//!
//! `$` wraps the first entity and `#` wraps the second one, whatever their
//! order in the sentence. Both are ordinary vocabulary entries.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{RbertError, Result};
use crate::semeval::RelationInstance;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const E1_MARKER: &str = "$";
pub const E2_MARKER: &str = "#";
pub const CONTINUATION_PREFIX: &str = "##";

/// Words longer than this are mapped straight to `[UNK]`.
const MAX_WORD_CHARS: usize = 100;

/// Token vocabulary. Ids are dense: the id of a token is its line number
/// (from zero) in the vocabulary file.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    cls: u32,
    sep: u32,
    pad: u32,
    unk: u32,
    e1_marker: u32,
    e2_marker: u32,
}

impl Vocab {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if ids.insert(tok.clone(), i as u32).is_some() {
                return Err(RbertError::InvalidArgument(format!(
                    "duplicate vocabulary entry {tok:?} at line {}",
                    i + 1
                )));
            }
        }
        let get = |t: &str| {
            ids.get(t).copied().ok_or_else(|| {
                RbertError::InvalidArgument(format!("vocabulary is missing reserved token {t:?}"))
            })
        };
        Ok(Vocab {
            cls: get(CLS)?,
            sep: get(SEP)?,
            pad: get(PAD)?,
            unk: get(UNK)?,
            e1_marker: get(E1_MARKER)?,
            e2_marker: get(E2_MARKER)?,
            tokens,
            ids,
        })
    }

    /// Reads a `vocab.txt` style file: one token per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RbertError::io(path, e))?;
        Vocab::from_tokens(text.lines().map(|l| l.trim_end_matches('\r')))
    }

    /// Whole-word vocabulary over a corpus: the reserved tokens followed by
    /// every distinct lowercased word and punctuation piece, sorted.
    pub fn from_instances(instances: &[RelationInstance]) -> Result<Self> {
        let reserved = [CLS, SEP, PAD, UNK, E1_MARKER, E2_MARKER];
        let words: BTreeSet<String> = instances
            .iter()
            .flat_map(|inst| inst.words.iter())
            .flat_map(|w| basic_split(w))
            .filter(|w| !reserved.contains(&w.as_str()))
            .collect();
        Vocab::from_tokens(reserved.iter().map(|t| t.to_string()).chain(words))
    }

    pub fn to_file_contents(&self) -> String {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        out
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }
    pub fn sep_id(&self) -> u32 {
        self.sep
    }
    pub fn pad_id(&self) -> u32 {
        self.pad
    }
    pub fn unk_id(&self) -> u32 {
        self.unk
    }
    pub fn e1_marker_id(&self) -> u32 {
        self.e1_marker
    }
    pub fn e2_marker_id(&self) -> u32 {
        self.e2_marker
    }
}

/// Greedy longest-match-first WordPiece decomposition of a single word.
/// Returns `[UNK]` alone when the word cannot be fully covered.
pub fn wordpiece(word: &str, vocab: &Vocab) -> Vec<u32> {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() || chars.len() > MAX_WORD_CHARS {
        return vec![vocab.unk_id()];
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while end > start {
            let mut candidate: String = chars[start..end].iter().collect();
            if start > 0 {
                candidate.insert_str(0, CONTINUATION_PREFIX);
            }
            if let Some(id) = vocab.id(&candidate) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        match found {
            Some(id) => pieces.push(id),
            None => return vec![vocab.unk_id()],
        }
        start = end;
    }
    pieces
}

/// Lowercases and splits punctuation off into standalone pieces.
fn basic_split(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in word.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else if c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_ascii()) {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Subword ids for one dataset word (which may carry attached punctuation).
pub fn tokenize_word(word: &str, vocab: &Vocab) -> Vec<u32> {
    basic_split(word)
        .iter()
        .flat_map(|w| wordpiece(w, vocab))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub max_len: usize,
    /// Wrap e1 with `$` and e2 with `#`. Off for the no-marker ablations.
    pub markers: bool,
    /// Append `[SEP]` after the sentence.
    pub append_sep: bool,
}

impl EncodeOptions {
    pub fn new(max_len: usize) -> Self {
        EncodeOptions {
            max_len,
            markers: true,
            append_sep: false,
        }
    }

    pub fn without_markers(mut self) -> Self {
        self.markers = false;
        self
    }
}

/// Tokenizer output for one instance. Ranges are inclusive subword indices
/// and exclude the marker tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub id: u32,
    pub input_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub e1_range: (usize, usize),
    pub e2_range: (usize, usize),
    pub label_index: usize,
    pub max_len: usize,
    pub marked: bool,
}

impl EncodedExample {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }
}

/// Encodes with markers and no `[SEP]`.
pub fn encode(instance: &RelationInstance, vocab: &Vocab, max_len: usize) -> Result<EncodedExample> {
    encode_with(instance, vocab, &EncodeOptions::new(max_len))
}

pub fn encode_with(
    instance: &RelationInstance,
    vocab: &Vocab,
    options: &EncodeOptions,
) -> Result<EncodedExample> {
    let fail = |message: String| RbertError::Encode {
        id: instance.id,
        message,
    };
    let min_len = if options.markers { 8 } else { 4 };
    if options.max_len < min_len {
        return Err(fail(format!("max_len {} is below {min_len}", options.max_len)));
    }
    instance
        .validate()
        .map_err(|e| fail(e.to_string()))?;

    let (e1, e2) = (instance.e1, instance.e2);
    let mut ids = vec![vocab.cls_id()];
    let mut e1_range = (0, 0);
    let mut e2_range = (0, 0);
    // Last position that must survive truncation.
    let mut required_end = 0;

    for (w, word) in instance.words.iter().enumerate() {
        if w == e1.start {
            if options.markers {
                ids.push(vocab.e1_marker_id());
            }
            e1_range.0 = ids.len();
        }
        if w == e2.start {
            if options.markers {
                ids.push(vocab.e2_marker_id());
            }
            e2_range.0 = ids.len();
        }
        ids.extend(tokenize_word(word, vocab));
        if w == e1.end {
            e1_range.1 = ids.len() - 1;
            if options.markers {
                ids.push(vocab.e1_marker_id());
            }
            required_end = ids.len() - 1;
        }
        if w == e2.end {
            e2_range.1 = ids.len() - 1;
            if options.markers {
                ids.push(vocab.e2_marker_id());
            }
            required_end = ids.len() - 1;
        }
    }

    if e1_range.1 < e1_range.0 || e2_range.1 < e2_range.0 {
        return Err(fail("an entity produced no subwords".into()));
    }

    let budget = options.max_len - usize::from(options.append_sep);
    if required_end >= budget {
        return Err(fail(format!(
            "truncating to max_len {} would cut an entity or marker (needs {} positions)",
            options.max_len,
            required_end + 1 + usize::from(options.append_sep)
        )));
    }
    ids.truncate(budget);
    if options.append_sep {
        ids.push(vocab.sep_id());
    }

    Ok(EncodedExample {
        id: instance.id,
        attention_mask: vec![1; ids.len()],
        input_ids: ids,
        e1_range,
        e2_range,
        label_index: instance.label.class_index(),
        max_len: options.max_len,
        marked: options.markers,
    })
}

/// Encodes a whole split, failing on the first instance that does not fit.
pub fn encode_all(
    instances: &[RelationInstance],
    vocab: &Vocab,
    options: &EncodeOptions,
) -> Result<Vec<EncodedExample>> {
    instances
        .iter()
        .map(|inst| encode_with(inst, vocab, options))
        .collect()
}

/// A rectangular, padded batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub ids: Vec<u32>,
    pub input_ids: Array2<u32>,
    pub attention_mask: Array2<u8>,
    pub e1_ranges: Vec<(usize, usize)>,
    pub e2_ranges: Vec<(usize, usize)>,
    pub labels: Vec<usize>,
    pub lengths: Vec<usize>,
    pub marked: bool,
}

impl Batch {
    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn seq_len(&self) -> usize {
        self.input_ids.ncols()
    }

    /// Row `i` with padding removed.
    pub fn unpadded(&self, i: usize) -> Vec<u32> {
        self.input_ids.row(i).iter().take(self.lengths[i]).copied().collect()
    }
}

/// Pads every example to the shared `max_len`.
pub fn pad_batch(examples: &[&EncodedExample], pad_id: u32) -> Result<Batch> {
    let first = examples
        .first()
        .ok_or_else(|| RbertError::InvalidArgument("cannot build an empty batch".into()))?;
    let max_len = first.max_len;
    let marked = first.marked;
    if let Some(bad) = examples.iter().find(|e| e.max_len != max_len || e.marked != marked) {
        return Err(RbertError::InvalidArgument(format!(
            "example {} was encoded with different settings than the rest of the batch",
            bad.id
        )));
    }

    let mut input_ids = Array2::from_elem((examples.len(), max_len), pad_id);
    let mut attention_mask = Array2::zeros((examples.len(), max_len));
    for (row, ex) in examples.iter().enumerate() {
        for (col, (&id, &m)) in ex.input_ids.iter().zip(&ex.attention_mask).enumerate() {
            input_ids[[row, col]] = id;
            attention_mask[[row, col]] = m;
        }
    }
    Ok(Batch {
        ids: examples.iter().map(|e| e.id).collect(),
        input_ids,
        attention_mask,
        e1_ranges: examples.iter().map(|e| e.e1_range).collect(),
        e2_ranges: examples.iter().map(|e| e.e2_range).collect(),
        labels: examples.iter().map(|e| e.label_index).collect(),
        lengths: examples.iter().map(|e| e.len()).collect(),
        marked,
    })
}

/// Joins subword pieces back into surface text: `##` pieces glue onto the
/// previous piece, everything else is space separated.
pub fn detokenize(ids: &[u32], vocab: &Vocab) -> String {
    let mut out = String::new();
    for &id in ids {
        let tok = vocab.token(id).unwrap_or(UNK);
        if let Some(rest) = tok.strip_prefix(CONTINUATION_PREFIX) {
            out.push_str(rest);
        } else {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(tok);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semeval::{DatasetFormat, parse_dataset};

    fn vocab() -> Vocab {
        let words = [
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "$", "#", ".", ",", "the", "kitchen", "is", "last",
            "renovated", "part", "of", "house", "a", "b", "hit", "un", "##believ", "##able",
            "##bel", "##ie", "##v", "believ",
        ];
        Vocab::from_tokens(words).unwrap()
    }

    fn kitchen() -> RelationInstance {
        let text = "1\t\"The <e1>kitchen</e1> is the last renovated part of the <e2>house</e2>.\"\nComponent-Whole(e1,e2)\n";
        parse_dataset(text, DatasetFormat::Train).unwrap().remove(0)
    }

    #[test]
    fn kitchen_marked_sequence() {
        let v = vocab();
        let enc = encode(&kitchen(), &v, 64).unwrap();
        let toks: Vec<&str> = enc.input_ids.iter().map(|&i| v.token(i).unwrap()).collect();
        assert_eq!(
            toks.join(" "),
            "[CLS] the $ kitchen $ is the last renovated part of the # house # ."
        );
        assert_eq!(enc.e1_range, (3, 3));
        assert_eq!(enc.e2_range, (13, 13));
    }

    #[test]
    fn single_subword_entities() {
        let v = vocab();
        let inst = parse_dataset("1\t\"<e1>A</e1> hit <e2>B</e2> .\"\nOther\n", DatasetFormat::Train)
            .unwrap()
            .remove(0);
        let enc = encode(&inst, &v, 16).unwrap();
        assert_eq!(enc.e1_range, (2, 2));
        assert_eq!(enc.e2_range, (6, 6));
        assert_eq!(enc.input_ids[0], v.cls_id());
    }

    #[test]
    fn reversed_entities_keep_marker_identity() {
        let v = vocab();
        let inst = parse_dataset("1\t\"<e2>A</e2> hit <e1>B</e1> .\"\nOther\n", DatasetFormat::Train)
            .unwrap()
            .remove(0);
        let enc = encode(&inst, &v, 16).unwrap();
        let toks: Vec<&str> = enc.input_ids.iter().map(|&i| v.token(i).unwrap()).collect();
        assert_eq!(toks.join(" "), "[CLS] # a # hit $ b $ .");
        assert_eq!(enc.e1_range, (6, 6));
        assert_eq!(enc.e2_range, (2, 2));
    }

    #[test]
    fn wordpiece_greedy() {
        let v = vocab();
        let ids = wordpiece("unbelievable", &v);
        let toks: Vec<&str> = ids.iter().map(|&i| v.token(i).unwrap()).collect();
        assert_eq!(toks, ["un", "##believ", "##able"]);
        assert_eq!(wordpiece("house", &v), vec![v.id("house").unwrap()]);
        assert_eq!(wordpiece("zzz", &v), vec![v.unk_id()]);
        // prefix matches but the remainder has no continuation piece
        assert_eq!(wordpiece("unx", &v), vec![v.unk_id()]);
    }

    #[test]
    fn multi_piece_entity_range() {
        let v = vocab();
        let inst = parse_dataset(
            "1\t\"the <e1>unbelievable</e1> hit <e2>house</e2> .\"\nOther\n",
            DatasetFormat::Train,
        )
        .unwrap()
        .remove(0);
        let enc = encode(&inst, &v, 32).unwrap();
        let standalone = wordpiece("unbelievable", &v);
        assert_eq!(enc.e1_range.1 - enc.e1_range.0 + 1, standalone.len());
        assert_eq!(&enc.input_ids[enc.e1_range.0..=enc.e1_range.1], &standalone[..]);
        assert_eq!(detokenize(&standalone, &v), "unbelievable");
    }

    #[test]
    fn attached_punctuation_is_split() {
        let v = vocab();
        assert_eq!(tokenize_word("House,", &v), vec![v.id("house").unwrap(), v.id(",").unwrap()]);
    }

    #[test]
    fn truncation_rules() {
        let v = vocab();
        let inst = kitchen();
        // the second entity's closing marker sits at index 14
        assert!(matches!(encode(&inst, &v, 14), Err(RbertError::Encode { id: 1, .. })));
        let enc = encode(&inst, &v, 15).unwrap();
        assert_eq!(enc.len(), 15);
        assert_eq!(v.token(*enc.input_ids.last().unwrap()), Some("#"));
        assert!(encode(&inst, &v, 7).is_err());
    }

    #[test]
    fn marker_free_encoding() {
        let v = vocab();
        let enc = encode_with(&kitchen(), &v, &EncodeOptions::new(64).without_markers()).unwrap();
        assert!(!enc.input_ids.contains(&v.e1_marker_id()));
        assert!(!enc.input_ids.contains(&v.e2_marker_id()));
        assert_eq!(v.token(enc.input_ids[enc.e1_range.0]), Some("kitchen"));
        assert_eq!(v.token(enc.input_ids[enc.e2_range.0]), Some("house"));
    }

    #[test]
    fn sep_option() {
        let v = vocab();
        let opts = EncodeOptions { append_sep: true, ..EncodeOptions::new(64) };
        let enc = encode_with(&kitchen(), &v, &opts).unwrap();
        assert_eq!(*enc.input_ids.last().unwrap(), v.sep_id());
    }

    #[test]
    fn batch_padding() {
        let v = vocab();
        let mk = |n: usize| EncodedExample {
            id: n as u32,
            input_ids: vec![v.cls_id(); n],
            attention_mask: vec![1; n],
            e1_range: (1, 1),
            e2_range: (3, 3),
            label_index: 0,
            max_len: 16,
            marked: true,
        };
        let (a, b) = (mk(10), mk(12));
        let batch = pad_batch(&[&a, &b], v.pad_id()).unwrap();
        assert_eq!(batch.input_ids.dim(), (2, 16));
        assert_eq!(batch.attention_mask.row(0).iter().map(|&m| m as usize).sum::<usize>(), 10);
        assert_eq!(batch.attention_mask.row(1).iter().map(|&m| m as usize).sum::<usize>(), 12);
        assert_eq!(batch.unpadded(1), b.input_ids);
        let single = pad_batch(&[&a], v.pad_id()).unwrap();
        assert_eq!(single.unpadded(0), a.input_ids);
        assert!(pad_batch(&[], v.pad_id()).is_err());
    }

    #[test]
    fn vocab_requires_reserved_tokens() {
        assert!(Vocab::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "$"]).is_err());
        assert!(Vocab::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "$", "#", "#"]).is_err());
    }

    #[test]
    fn corpus_vocab_has_no_unknowns() {
        let inst = kitchen();
        let v = Vocab::from_instances(std::slice::from_ref(&inst)).unwrap();
        let enc = encode(&inst, &v, 64).unwrap();
        assert!(!enc.input_ids.contains(&v.unk_id()));
        assert_eq!(v.id("[CLS]"), Some(0));
        assert!(v.id("kitchen").is_some() && v.id(".").is_some());
    }
}
