//! Corpus-level CHRF++ and paired significance testing.
//!
//! Character n-grams (orders 1..=6 by default) are taken from the text with
//! all whitespace removed; word n-grams (orders 1..=2) from whitespace
//! tokens. Matches are clipped per n-gram. Corpus precision and recall are
//! the arithmetic means over orders of matched/hyp and matched/ref, an order
//! being skipped only when both sides are empty, and the score is the
//! F-beta of the two means scaled to 0..100.

mod significance;

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use significance::{paired_significance, significance_from_stats, BetterSystem, SignificanceResult, METHOD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        Self {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

impl ChrfConfig {
    pub fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCounts {
    pub matched: u64,
    pub hyp: u64,
    pub reference: u64,
}

impl AddAssign for OrderCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.matched += rhs.matched;
        self.hyp += rhs.hyp;
        self.reference += rhs.reference;
    }
}

/// Per-order counts: character orders first, then word orders.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramStats {
    pub orders: Vec<OrderCounts>,
}

impl NGramStats {
    pub fn zeros(orders: usize) -> Self {
        Self {
            orders: vec![OrderCounts::default(); orders],
        }
    }
}

impl AddAssign<&NGramStats> for NGramStats {
    fn add_assign(&mut self, rhs: &NGramStats) {
        if self.orders.len() < rhs.orders.len() {
            self.orders.resize(rhs.orders.len(), OrderCounts::default());
        }
        for (a, b) in self.orders.iter_mut().zip(&rhs.orders) {
            *a += *b;
        }
    }
}

fn ngram_counts<T: Hash + Eq>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn order_counts<T: Hash + Eq>(hyp: &[T], reference: &[T], n: usize) -> OrderCounts {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    OrderCounts {
        matched,
        hyp: h.values().sum(),
        reference: r.values().sum(),
    }
}

pub fn sentence_stats(hypothesis: &str, reference: &str, cfg: &ChrfConfig) -> NGramStats {
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hyp_words: Vec<&str> = hypothesis.split_whitespace().collect();
    let ref_words: Vec<&str> = reference.split_whitespace().collect();
    let mut orders = Vec::with_capacity(cfg.orders());
    for n in 1..=cfg.char_order {
        orders.push(order_counts(&hyp_chars, &ref_chars, n));
    }
    for n in 1..=cfg.word_order {
        orders.push(order_counts(&hyp_words, &ref_words, n));
    }
    NGramStats { orders }
}

/// Score in 0..100 from aggregated counts.
pub fn score_from_totals(totals: &NGramStats, beta: f64) -> f64 {
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut used = 0usize;
    for o in &totals.orders {
        if o.hyp == 0 && o.reference == 0 {
            continue;
        }
        used += 1;
        if o.hyp > 0 {
            precision += o.matched as f64 / o.hyp as f64;
        }
        if o.reference > 0 {
            recall += o.matched as f64 / o.reference as f64;
        }
    }
    if used == 0 {
        return 0.0;
    }
    precision /= used as f64;
    recall /= used as f64;
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if precision + recall == 0.0 || denom == 0.0 {
        return 0.0;
    }
    (100.0 * (1.0 + b2) * precision * recall / denom).clamp(0.0, 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChrfScore {
    pub value: f64,
    pub beta: f64,
    pub sentence_stats: Vec<NGramStats>,
}

impl ChrfScore {
    /// Two-decimal rendering used in all tables.
    pub fn display(&self) -> String {
        format!("{:.2}", self.value)
    }
}

pub fn sum_stats<'a>(stats: impl IntoIterator<Item = &'a NGramStats>) -> NGramStats {
    let mut total = NGramStats::default();
    for s in stats {
        total += s;
    }
    total
}

pub fn corpus_chrf(stats: Vec<NGramStats>, beta: f64) -> Result<ChrfScore> {
    if stats.is_empty() {
        return Err(Error::EmptyStats);
    }
    let value = score_from_totals(&sum_stats(&stats), beta);
    Ok(ChrfScore {
        value,
        beta,
        sentence_stats: stats,
    })
}

pub(crate) fn check_lengths(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LineCountMismatch { what, left, right });
    }
    Ok(())
}

/// Per-sentence stats computed in parallel, in input order.
pub fn corpus_stats<S: AsRef<str> + Sync>(
    hypotheses: &[S],
    references: &[S],
    cfg: &ChrfConfig,
) -> Result<Vec<NGramStats>> {
    check_lengths("hypotheses and references", hypotheses.len(), references.len())?;
    Ok(hypotheses
        .par_iter()
        .zip(references.par_iter())
        .map(|(h, r)| sentence_stats(h.as_ref(), r.as_ref(), cfg))
        .collect())
}

/// Convenience: score a hypothesis file's lines against references.
pub fn corpus_chrf_lines<S: AsRef<str> + Sync>(
    hypotheses: &[S],
    references: &[S],
    cfg: &ChrfConfig,
) -> Result<ChrfScore> {
    corpus_chrf(corpus_stats(hypotheses, references, cfg)?, cfg.beta)
}
