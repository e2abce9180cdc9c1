//! Ranked merge tables and their text serialization.
//!
//! File layout:
//!
//! ```text
//! #asym-bpe v1
//! #fingerprint <sha256 of the training word counts>
//! t h
//! th e</w>
//! ```
//!
//! Rank is line order among rule lines. A word-final symbol is written with
//! the suffix `</w>`. Inside symbol text, `\`, `#` and `<` are escaped with a
//! backslash, so an unescaped `<` can only start the word-final suffix and a
//! rule line can never be mistaken for a `#` metadata line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::symbol::{Symbol, CONTINUATION};
use crate::error::{Error, Result};

pub const HEADER: &str = "#asym-bpe v1";
const FINGERPRINT_KEY: &str = "#fingerprint ";
const FINAL_SUFFIX: &str = "</w>";

/// One merge operation. Rank 0 was learned first and applies first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeRule {
    pub left: Symbol,
    pub right: Symbol,
    pub rank: usize,
}

impl MergeRule {
    pub fn merged(&self) -> Symbol {
        self.left.merge(&self.right)
    }
}

#[derive(Debug, Clone, Default)]
struct Index {
    ids: HashMap<Symbol, u32>,
    chars: HashMap<(char, bool), u32>,
    /// (left id, right id) -> (rank, merged id)
    merges: HashMap<(u32, u32), (u32, u32)>,
}

impl Index {
    fn intern(&mut self, sym: &Symbol) -> u32 {
        if let Some(&id) = self.ids.get(sym) {
            return id;
        }
        let id = self.ids.len() as u32;
        let mut chars = sym.text().chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            self.chars.insert((c, sym.is_word_final()), id);
        }
        self.ids.insert(sym.clone(), id);
        id
    }
}

/// An ordered list of merge rules learned from one corpus.
#[derive(Debug, Clone)]
pub struct MergeTable {
    rules: Vec<MergeRule>,
    source_fingerprint: String,
    index: Index,
}

impl PartialEq for MergeTable {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules && self.source_fingerprint == other.source_fingerprint
    }
}

impl Eq for MergeTable {}

impl MergeTable {
    /// Builds a table from pairs in rank order.
    ///
    /// Rejects word-final left symbols, repeated pairs, and merges whose
    /// result would contain the continuation marker.
    pub fn new(pairs: Vec<(Symbol, Symbol)>, source_fingerprint: impl Into<String>) -> Result<Self> {
        let mut index = Index::default();
        let mut rules = Vec::with_capacity(pairs.len());
        for (rank, (left, right)) in pairs.into_iter().enumerate() {
            let bad = |message: String| Error::TableFormat {
                line: rank + 1,
                message,
            };
            if left.is_word_final() {
                return Err(bad(format!("left symbol {left} is word-final")));
            }
            let merged = left.merge(&right);
            if merged.text().contains(CONTINUATION) {
                return Err(bad(format!("merge {left} {right} would contain {CONTINUATION:?}")));
            }
            let l = index.intern(&left);
            let r = index.intern(&right);
            let m = index.intern(&merged);
            if index.merges.insert((l, r), (rank as u32, m)).is_some() {
                return Err(bad(format!("duplicate rule {left} {right}")));
            }
            rules.push(MergeRule { left, right, rank });
        }
        Ok(Self {
            rules,
            source_fingerprint: source_fingerprint.into(),
            index,
        })
    }

    /// Identity tokenizer: zero merges.
    pub fn empty() -> Self {
        Self {
            rules: Vec::new(),
            source_fingerprint: String::new(),
            index: Index::default(),
        }
    }

    pub fn rules(&self) -> &[MergeRule] {
        &self.rules
    }

    /// Number of merge operations.
    pub fn nmo(&self) -> usize {
        self.rules.len()
    }

    pub fn source_fingerprint(&self) -> &str {
        &self.source_fingerprint
    }

    /// The first `n` rules as a table of their own. Because learning is
    /// greedy and deterministic this equals learning with `n` merges.
    pub fn truncated(&self, n: usize) -> Self {
        let pairs = self.rules[..n.min(self.rules.len())]
            .iter()
            .map(|r| (r.left.clone(), r.right.clone()))
            .collect();
        Self::new(pairs, self.source_fingerprint.clone())
            .expect("a prefix of a valid table is valid")
    }

    pub(crate) fn char_id(&self, c: char, word_final: bool) -> Option<u32> {
        self.index.chars.get(&(c, word_final)).copied()
    }

    /// (rank, merged id) for an adjacent pair, if a rule exists.
    pub(crate) fn lookup(&self, left: u32, right: u32) -> Option<(u32, u32)> {
        self.index.merges.get(&(left, right)).copied()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        if !self.source_fingerprint.is_empty() {
            let _ = writeln!(out, "{FINGERPRINT_KEY}{}", self.source_fingerprint);
        }
        for rule in &self.rules {
            out.push_str(&encode_symbol(&rule.left));
            out.push(' ');
            out.push_str(&encode_symbol(&rule.right));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).transpose()?;
        if header.as_deref().map(str::trim_end) != Some(HEADER) {
            return Err(Error::TableFormat {
                line: 1,
                message: format!("expected header {HEADER:?}"),
            });
        }
        let mut fingerprint = String::new();
        let mut pairs = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() {
                continue;
            }
            if let Some(fp) = line.strip_prefix(FINGERPRINT_KEY) {
                fingerprint = fp.trim().to_owned();
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::TableFormat {
                line: lineno,
                message,
            };
            let mut parts = line.split(' ');
            let (Some(l), Some(r), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected exactly two space-separated symbols".into()));
            };
            let left = decode_symbol(l).map_err(bad)?;
            let right = decode_symbol(r).map_err(bad)?;
            pairs.push((left, right));
        }
        Self::new(pairs, fingerprint)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

fn encode_symbol(sym: &Symbol) -> String {
    let mut out = String::with_capacity(sym.text().len() + FINAL_SUFFIX.len());
    for c in sym.text().chars() {
        if matches!(c, '\\' | '#' | '<') {
            out.push('\\');
        }
        out.push(c);
    }
    if sym.is_word_final() {
        out.push_str(FINAL_SUFFIX);
    }
    out
}

fn decode_symbol(raw: &str) -> std::result::Result<Symbol, String> {
    let mut text = String::with_capacity(raw.len());
    let mut word_final = false;
    let mut rest = raw;
    while let Some(c) = rest.chars().next() {
        match c {
            '\\' => {
                let mut it = rest[1..].chars();
                let escaped = it.next().ok_or_else(|| format!("dangling escape in {raw:?}"))?;
                text.push(escaped);
                rest = it.as_str();
            }
            '<' if rest == FINAL_SUFFIX => {
                word_final = true;
                rest = "";
            }
            '<' => return Err(format!("unescaped '<' in {raw:?}")),
            _ => {
                text.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    Symbol::new(text, word_final).map_err(|e| e.to_string())
}
