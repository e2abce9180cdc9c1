use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Continuation marker appended to every non-final piece of a word.
pub const CONTINUATION: &str = "@@";

/// A unit of the working vocabulary: a non-empty string plus a flag telling
/// whether it ends a word.
///
/// Ordering is by text (code-point order), then non-final before final. This
/// order drives tie-breaking during learning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    text: String,
    word_final: bool,
}

impl Symbol {
    pub fn new(text: impl Into<String>, word_final: bool) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::InvalidSymbol(text, "empty"));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidSymbol(text, "contains whitespace"));
        }
        Ok(Self { text, word_final })
    }

    /// Single-character symbol. Callers guarantee `c` is not whitespace.
    pub(crate) fn from_char(c: char, word_final: bool) -> Self {
        debug_assert!(!c.is_whitespace());
        Self {
            text: c.to_string(),
            word_final,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_word_final(&self) -> bool {
        self.word_final
    }

    /// Symbol produced by merging `self` with `right`.
    pub fn merge(&self, right: &Symbol) -> Symbol {
        let mut text = String::with_capacity(self.text.len() + right.text.len());
        text.push_str(&self.text);
        text.push_str(&right.text);
        Symbol {
            text,
            word_final: right.word_final,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)?;
        if self.word_final {
            f.write_str("</w>")?;
        }
        Ok(())
    }
}

/// Splits a word into characters, the last one flagged word-final.
pub fn word_symbols(word: &str) -> Vec<Symbol> {
    let n = word.chars().count();
    word.chars()
        .enumerate()
        .map(|(i, c)| Symbol::from_char(c, i + 1 == n))
        .collect()
}

/// Word-type frequencies of a whitespace-tokenized corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts {
    counts: BTreeMap<String, u64>,
}

impl WordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut wc = Self::new();
        for s in sentences {
            wc.add_sentence(s.as_ref());
        }
        wc
    }

    pub fn add_sentence(&mut self, sentence: &str) {
        for word in sentence.split_whitespace() {
            self.add_word(word, 1);
        }
    }

    /// Adds `freq` occurrences of `word`. Whitespace inside `word` is not
    /// allowed; zero frequencies are ignored.
    pub fn add_word(&mut self, word: &str, freq: u64) {
        debug_assert!(!word.chars().any(char::is_whitespace));
        if freq == 0 || word.is_empty() {
            return;
        }
        *self.counts.entry(word.to_owned()).or_insert(0) += freq;
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &f)| (w.as_str(), f))
    }

    /// SHA-256 over `word\tfreq\n` lines in sorted word order, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (w, f) in &self.counts {
            hasher.update(w.as_bytes());
            hasher.update(b"\t");
            hasher.update(f.to_string().as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl<S: AsRef<str>> FromIterator<(S, u64)> for WordCounts {
    fn from_iter<T: IntoIterator<Item = (S, u64)>>(iter: T) -> Self {
        let mut wc = Self::new();
        for (w, f) in iter {
            wc.add_word(w.as_ref(), f);
        }
        wc
    }
}
