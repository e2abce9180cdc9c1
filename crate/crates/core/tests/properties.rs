mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use asym_bpe::bpe::{apply_bpe, learn_bpe, unsegment, unsegment_line, vocabulary, MergeTable, WordCounts};
use asym_bpe::chrf::{corpus_chrf_lines, ChrfConfig};
use asym_bpe::sampler::{bin_histogram, draw_indices, make_sample_plan, LengthBin, ParallelCorpus};

fn word() -> impl Strategy<Value = String> {
    // Small alphabets so merges happen; '@', '#', '\' and '<' stress the
    // marker and the table escapes.
    prop_oneof![
        "[abc]{1,8}",
        "[कखग्ा]{1,6}",
        "[a@#<\\\\]{1,5}",
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 0..8).prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(sentence(), 1..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn roundtrip(train in corpus(), probe in prop::collection::vec(sentence(), 1..10), nmo in 0usize..80) {
        let counts = WordCounts::from_sentences(&train);
        prop_assume!(!counts.is_empty());
        let table = learn_bpe(&counts, nmo).unwrap();
        let table = MergeTable::from_text(&table.to_text()).unwrap();
        for s in train.iter().chain(&probe) {
            let seg = apply_bpe(&table, s);
            prop_assert_eq!(&unsegment(&seg).unwrap(), s);
            prop_assert_eq!(&unsegment_line(&seg.to_string()).unwrap(), s);
            prop_assert!(seg.pieces.iter().all(|p| !p.text.contains("@@")));
        }
    }

    #[test]
    fn prefix_and_truncation(train in corpus(), n in 0usize..60, extra in 1usize..60) {
        let counts = WordCounts::from_sentences(&train);
        prop_assume!(!counts.is_empty());
        let small = learn_bpe(&counts, n).unwrap();
        let big = learn_bpe(&counts, n + extra).unwrap();
        prop_assert_eq!(small.rules(), &big.rules()[..small.nmo()]);
        prop_assert_eq!(big.truncated(n), small);
    }

    #[test]
    fn matches_brute_force(train in corpus(), nmo in 1usize..60) {
        let counts = WordCounts::from_sentences(&train);
        prop_assume!(!counts.is_empty());
        let got: Vec<_> = learn_bpe(&counts, nmo).unwrap().rules().iter().map(|r| (r.left.clone(), r.right.clone())).collect();
        prop_assert_eq!(got, common::oracle_bpe(&counts, nmo));
    }

    #[test]
    fn more_merges_never_add_pieces(train in corpus(), n in 0usize..40, extra in 1usize..40) {
        let counts = WordCounts::from_sentences(&train);
        prop_assume!(!counts.is_empty());
        let big = learn_bpe(&counts, n + extra).unwrap();
        let small = big.truncated(n);
        let pieces = |t: &MergeTable| train.iter().map(|s| apply_bpe(t, s).pieces.len()).sum::<usize>();
        prop_assert!(pieces(&big) <= pieces(&small));
    }

    #[test]
    fn vocabulary_bound(train in corpus(), nmo in 0usize..60) {
        let counts = WordCounts::from_sentences(&train);
        prop_assume!(!counts.is_empty());
        let table = learn_bpe(&counts, nmo).unwrap();
        let mut chars = BTreeSet::new();
        for (w, _) in counts.iter() {
            let cs: Vec<char> = w.chars().collect();
            for (i, c) in cs.iter().enumerate() {
                chars.insert((*c, i + 1 == cs.len()));
            }
        }
        prop_assert!(vocabulary(&table, &counts).len() <= chars.len() + table.nmo());
    }

    #[test]
    fn chrf_matches_independent_definition(h in sentence(), r in sentence()) {
        let lib = corpus_chrf_lines(&[h.as_str()], &[r.as_str()], &ChrfConfig::default()).unwrap().value;
        let indep = common::reference_chrf(&h, &r);
        prop_assert!((0.0..=100.0).contains(&lib));
        prop_assert!((lib - indep).abs() < 1e-9, "{} vs {}", lib, indep);
    }

    #[test]
    fn sampling_respects_quotas(lengths in prop::collection::vec(0usize..60, 1..400), frac in 0.0f64..=1.0, seed: u64) {
        let src: Vec<String> = lengths.iter().map(|&n| vec!["w"; n].join(" ")).collect();
        let tgt: Vec<String> = (0..src.len()).map(|i| i.to_string()).collect();
        let corpus = ParallelCorpus::new(src, tgt).unwrap();
        let bins = LengthBin::default_bins();
        let plan = bin_histogram(&corpus, &bins).unwrap();
        let target = (frac * corpus.len() as f64).floor() as u64;
        let sp = make_sample_plan(&plan, target, seed, 10).unwrap();
        prop_assert!(sp.sample_size() <= target);
        let idx = draw_indices(&corpus, &sp).unwrap();
        prop_assert_eq!(idx.len() as u64, sp.sample_size());
        let uniq: BTreeSet<_> = idx.iter().collect();
        prop_assert_eq!(uniq.len(), idx.len());
        prop_assert_eq!(draw_indices(&corpus, &sp).unwrap(), idx);
        if target == corpus.len() as u64 {
            prop_assert_eq!(sp.sample_size(), target);
        }
    }
}

#[test]
fn count_pairs_examples() {
    use asym_bpe::bpe::{count_pairs, Symbol};
    let s = |t: &str, f| Symbol::new(t, f).unwrap();
    let c = count_pairs(&[("aaab", 3)].into_iter().collect()).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c[&(s("a", false), s("a", false))], 6);
    assert_eq!(c[&(s("a", false), s("b", true))], 3);
    assert!(count_pairs(&[("x", 1)].into_iter().collect()).unwrap().is_empty());
    let c = count_pairs(&[("ab", 2), ("ba", 1)].into_iter().collect()).unwrap();
    assert_eq!(c[&(s("a", false), s("b", true))], 2);
    assert_eq!(c[&(s("b", false), s("a", true))], 1);
    assert!(count_pairs(&WordCounts::new()).is_err());
}

#[test]
fn learned_tables_are_deterministic() {
    let lines = common::mixed_script_lines(21, 500);
    let counts = WordCounts::from_sentences(&lines);
    let a = learn_bpe(&counts, 300).unwrap().to_text();
    let b = learn_bpe(&WordCounts::from_sentences(&lines), 300).unwrap().to_text();
    assert_eq!(a, b);
}
