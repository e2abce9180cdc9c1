use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use log::debug;

use super::symbol::{word_symbols, Symbol, WordCounts, CONTINUATION};
use super::table::MergeTable;
use crate::error::{Error, Result};

/// Frequency-weighted counts of adjacent symbol pairs over the character
/// split of every word. Overlapping adjacencies all count.
pub fn count_pairs(corpus: &WordCounts) -> Result<BTreeMap<(Symbol, Symbol), u64>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = BTreeMap::new();
    for (word, freq) in corpus.iter() {
        let syms = word_symbols(word);
        for w in syms.windows(2) {
            *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += freq;
        }
    }
    Ok(counts)
}

/// Learns up to `nmo` merge rules.
///
/// Each step picks the most frequent adjacent pair, breaking ties toward the
/// smallest `(left, right)` in symbol order, and rewrites every word
/// left to right. Pairs whose merge would contain `@@` are never selected,
/// which keeps segmented output reversible. Learning stops early once no
/// eligible pair remains.
pub fn learn_bpe(corpus: &WordCounts, nmo: usize) -> Result<MergeTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut learner = Learner::new(corpus);
    let mut pairs = Vec::with_capacity(nmo);
    while pairs.len() < nmo {
        let Some((l, r)) = learner.best_pair() else {
            debug!("no mergeable pair left after {} merges", pairs.len());
            break;
        };
        pairs.push(((*learner.symbols[l as usize]).clone(), (*learner.symbols[r as usize]).clone()));
        learner.merge(l, r);
    }
    MergeTable::new(pairs, corpus.fingerprint())
}

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Arc<Symbol>,
    right: Arc<Symbol>,
    ids: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: higher count first, then the smaller pair.
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    symbols: Vec<Arc<Symbol>>,
    ids: HashMap<Arc<Symbol>, u32>,
    words: Vec<Vec<u32>>,
    freqs: Vec<u64>,
    pair_counts: HashMap<(u32, u32), u64>,
    /// Words that contained a pair at some point. May hold stale entries.
    occurrences: HashMap<(u32, u32), Vec<u32>>,
    heap: BinaryHeap<Candidate>,
}

impl Learner {
    fn new(corpus: &WordCounts) -> Self {
        let mut learner = Self {
            symbols: Vec::new(),
            ids: HashMap::new(),
            words: Vec::with_capacity(corpus.len()),
            freqs: Vec::with_capacity(corpus.len()),
            pair_counts: HashMap::new(),
            occurrences: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for (word, freq) in corpus.iter() {
            let ids: Vec<u32> = word_symbols(word)
                .into_iter()
                .map(|s| learner.intern(s))
                .collect();
            let wi = learner.words.len() as u32;
            for w in ids.windows(2) {
                let pair = (w[0], w[1]);
                *learner.pair_counts.entry(pair).or_insert(0) += freq;
                learner.occurrences.entry(pair).or_default().push(wi);
            }
            learner.words.push(ids);
            learner.freqs.push(freq);
        }
        let pairs: Vec<_> = learner.pair_counts.keys().copied().collect();
        for pair in pairs {
            learner.push_candidate(pair);
        }
        learner
    }

    fn intern(&mut self, sym: Symbol) -> u32 {
        if let Some(&id) = self.ids.get(&sym) {
            return id;
        }
        let id = self.symbols.len() as u32;
        let sym = Arc::new(sym);
        self.symbols.push(Arc::clone(&sym));
        self.ids.insert(sym, id);
        id
    }

    fn push_candidate(&mut self, pair: (u32, u32)) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count == 0 {
            return;
        }
        self.heap.push(Candidate {
            count,
            left: Arc::clone(&self.symbols[pair.0 as usize]),
            right: Arc::clone(&self.symbols[pair.1 as usize]),
            ids: pair,
        });
    }

    fn best_pair(&mut self) -> Option<(u32, u32)> {
        while let Some(c) = self.heap.pop() {
            if self.pair_counts.get(&c.ids).copied().unwrap_or(0) != c.count {
                continue; // stale
            }
            let eligible = !(c.left.text().ends_with('@') && c.right.text().starts_with('@'))
                && !c.left.text().contains(CONTINUATION)
                && !c.right.text().contains(CONTINUATION);
            if eligible {
                return Some(c.ids);
            }
        }
        None
    }

    fn merge(&mut self, left: u32, right: u32) {
        let merged_sym = self.symbols[left as usize].merge(&self.symbols[right as usize]);
        let merged = self.intern(merged_sym);
        let mut touched_words = self.occurrences.remove(&(left, right)).unwrap_or_default();
        touched_words.sort_unstable();
        touched_words.dedup();

        let mut changed: HashSet<(u32, u32)> = HashSet::new();
        for wi in touched_words {
            let old = &self.words[wi as usize];
            if !old.windows(2).any(|w| w[0] == left && w[1] == right) {
                continue;
            }
            let freq = self.freqs[wi as usize];
            let mut new = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && old[i] == left && old[i + 1] == right {
                    new.push(merged);
                    i += 2;
                } else {
                    new.push(old[i]);
                    i += 1;
                }
            }
            for w in old.windows(2) {
                let pair = (w[0], w[1]);
                let c = self.pair_counts.get_mut(&pair).expect("counted pair");
                *c -= freq;
                changed.insert(pair);
            }
            for w in new.windows(2) {
                let pair = (w[0], w[1]);
                *self.pair_counts.entry(pair).or_insert(0) += freq;
                self.occurrences.entry(pair).or_default().push(wi);
                changed.insert(pair);
            }
            self.words[wi as usize] = new;
        }
        self.pair_counts.retain(|_, c| *c > 0);
        for pair in changed {
            self.push_candidate(pair);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(t: &str, f: bool) -> Symbol {
        Symbol::new(t, f).unwrap()
    }

    #[test]
    fn count_pairs_overlapping() {
        let corpus: WordCounts = [("aaab", 3)].into_iter().collect();
        let counts = count_pairs(&corpus).unwrap();
        let expected: BTreeMap<_, _> = [
            ((sym("a", false), sym("a", false)), 6),
            ((sym("a", false), sym("b", true)), 3),
        ]
        .into_iter()
        .collect();
        assert_eq!(counts, expected);
    }

    #[test]
    fn count_pairs_single_symbol_word() {
        let corpus: WordCounts = [("x", 1)].into_iter().collect();
        assert!(count_pairs(&corpus).unwrap().is_empty());
    }

    #[test]
    fn count_pairs_two_words() {
        let corpus: WordCounts = [("ab", 2), ("ba", 1)].into_iter().collect();
        let counts = count_pairs(&corpus).unwrap();
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[&(sym("a", false), sym("b", true))], 2);
        assert_eq!(counts[&(sym("b", false), sym("a", true))], 1);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(count_pairs(&WordCounts::new()), Err(Error::EmptyCorpus)));
        assert!(matches!(learn_bpe(&WordCounts::new(), 3), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn learns_most_frequent_pair_first() {
        let corpus: WordCounts = [("aaab", 3)].into_iter().collect();
        let table = learn_bpe(&corpus, 1).unwrap();
        assert_eq!(table.nmo(), 1);
        assert_eq!(table.rules()[0].left, sym("a", false));
        assert_eq!(table.rules()[0].right, sym("a", false));
    }

    #[test]
    fn zero_merges_and_early_stop() {
        let corpus: WordCounts = [("aaab", 3)].into_iter().collect();
        assert_eq!(learn_bpe(&corpus, 0).unwrap().nmo(), 0);
        let single: WordCounts = [("x", 4)].into_iter().collect();
        assert_eq!(learn_bpe(&single, 5).unwrap().nmo(), 0);
        // aaab: (a,a) then (aa,a) or (aa, ...) until one symbol remains
        let full = learn_bpe(&corpus, 100).unwrap();
        assert_eq!(full.nmo(), 3);
    }

    #[test]
    fn ties_prefer_smallest_pair() {
        // (a,b) and (c,d) both occur once; (a,b) sorts first.
        let corpus: WordCounts = [("cd", 1), ("ab", 1)].into_iter().collect();
        let table = learn_bpe(&corpus, 1).unwrap();
        assert_eq!(table.rules()[0].left, sym("a", false));
    }

    #[test]
    fn never_merges_into_continuation_marker() {
        let corpus: WordCounts = [("a@@b", 10)].into_iter().collect();
        let table = learn_bpe(&corpus, 10).unwrap();
        assert!(table
            .rules()
            .iter()
            .all(|r| !r.merged().text().contains("@@")));
    }
}
