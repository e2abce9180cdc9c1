use std::collections::BTreeMap;
use std::fmt;

use super::symbol::{Symbol, WordCounts, CONTINUATION};
use super::table::MergeTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    /// True for every piece except the last one of a word.
    pub continuation: bool,
}

/// Subword pieces of one sentence.
///
/// Serializes as pieces joined by spaces, continuation pieces suffixed with
/// `@@`: `bo@@ su@@ sco`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SegmentedSentence {
    pub pieces: Vec<Piece>,
}

impl SegmentedSentence {
    /// Parses the serialized form. Pieces ending in `@@` are continuations.
    pub fn parse(text: &str) -> Self {
        let pieces = text
            .split_whitespace()
            .map(|tok| match tok.strip_suffix(CONTINUATION) {
                Some(stem) if !stem.is_empty() => Piece {
                    text: stem.to_owned(),
                    continuation: true,
                },
                _ => Piece {
                    text: tok.to_owned(),
                    continuation: false,
                },
            })
            .collect();
        Self { pieces }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

impl fmt::Display for SegmentedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&p.text)?;
            if p.continuation {
                f.write_str(CONTINUATION)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    end: usize,
    id: Option<u32>,
}

/// Segments one word into symbol spans (byte ranges of `word`).
///
/// Rules are applied in ascending rank, each rule in a single left-to-right
/// pass. Only rules whose pair is currently present matter, so the loop jumps
/// straight to the lowest-ranked present rule above the last one applied.
/// Characters unknown to the table stay single-character pieces.
fn segment_spans(table: &MergeTable, word: &str) -> Vec<Span> {
    let n = word.chars().count();
    let mut spans: Vec<Span> = word
        .char_indices()
        .enumerate()
        .map(|(i, (start, c))| Span {
            start,
            end: start + c.len_utf8(),
            id: table.char_id(c, i + 1 == n),
        })
        .collect();
    if table.nmo() == 0 {
        return spans;
    }
    let mut floor: Option<u32> = None;
    loop {
        let mut best: Option<(u32, u32, u32, u32)> = None; // rank, left, right, merged
        for w in spans.windows(2) {
            let (Some(l), Some(r)) = (w[0].id, w[1].id) else {
                continue;
            };
            if let Some((rank, merged)) = table.lookup(l, r) {
                if floor.is_some_and(|f| rank <= f) {
                    continue;
                }
                if best.is_none_or(|b| rank < b.0) {
                    best = Some((rank, l, r, merged));
                }
            }
        }
        let Some((rank, l, r, merged)) = best else {
            break;
        };
        let mut out = Vec::with_capacity(spans.len());
        let mut i = 0;
        while i < spans.len() {
            if i + 1 < spans.len() && spans[i].id == Some(l) && spans[i + 1].id == Some(r) {
                out.push(Span {
                    start: spans[i].start,
                    end: spans[i + 1].end,
                    id: Some(merged),
                });
                i += 2;
            } else {
                out.push(spans[i]);
                i += 1;
            }
        }
        spans = out;
        floor = Some(rank);
    }
    spans
}

/// Segments a whitespace-tokenized sentence.
pub fn apply_bpe(table: &MergeTable, sentence: &str) -> SegmentedSentence {
    let mut pieces = Vec::new();
    for word in sentence.split_whitespace() {
        let spans = segment_spans(table, word);
        let last = spans.len() - 1;
        pieces.extend(spans.iter().enumerate().map(|(i, s)| Piece {
            text: word[s.start..s.end].to_owned(),
            continuation: i != last,
        }));
    }
    SegmentedSentence { pieces }
}

/// Segments a word type into symbols carrying the word-final flag.
pub fn segment_word(table: &MergeTable, word: &str) -> Vec<Symbol> {
    let spans = segment_spans(table, word);
    let last = spans.len().saturating_sub(1);
    spans
        .iter()
        .enumerate()
        .map(|(i, s)| Symbol::new(&word[s.start..s.end], i == last).expect("word has no whitespace"))
        .collect()
}

/// Glues continuation pieces to their successors.
pub fn unsegment(seg: &SegmentedSentence) -> Result<String> {
    if seg.pieces.last().is_some_and(|p| p.continuation) {
        return Err(Error::DanglingContinuation);
    }
    let mut out = String::new();
    let mut glue = true;
    for p in &seg.pieces {
        if !glue {
            out.push(' ');
        }
        out.push_str(&p.text);
        glue = p.continuation;
    }
    Ok(out)
}

/// Removes every `@@ ` junction from a serialized segmentation.
pub fn unsegment_line(line: &str) -> Result<String> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.ends_with(CONTINUATION) {
        return Err(Error::DanglingContinuation);
    }
    Ok(trimmed.replace("@@ ", ""))
}

/// Like [`unsegment_line`] but drops a trailing marker instead of failing.
/// Model output is scored this way.
pub fn unsegment_lenient(line: &str) -> String {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    let joined = trimmed.replace("@@ ", "");
    match joined.strip_suffix(CONTINUATION) {
        Some(stem) => stem.to_owned(),
        None => joined,
    }
}

/// Piece inventory produced by segmenting every word of `corpus`, with
/// frequencies.
pub fn vocabulary(table: &MergeTable, corpus: &WordCounts) -> BTreeMap<Symbol, u64> {
    let mut vocab = BTreeMap::new();
    for (word, freq) in corpus.iter() {
        for sym in segment_word(table, word) {
            *vocab.entry(sym).or_insert(0) += freq;
        }
    }
    vocab
}
