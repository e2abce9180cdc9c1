#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use asym_bpe::bpe::{Symbol, WordCounts};
use asym_bpe::rng;

/// Brute-force BPE: recount every pair from scratch after each merge.
pub fn oracle_bpe(corpus: &WordCounts, nmo: usize) -> Vec<(Symbol, Symbol)> {
    let mut words: Vec<(Vec<Symbol>, u64)> = corpus
        .iter()
        .map(|(w, f)| {
            let chars: Vec<char> = w.chars().collect();
            let syms = chars
                .iter()
                .enumerate()
                .map(|(i, c)| Symbol::new(c.to_string(), i + 1 == chars.len()).unwrap())
                .collect();
            (syms, f)
        })
        .collect();
    let mut rules = Vec::new();
    while rules.len() < nmo {
        let mut counts: HashMap<(Symbol, Symbol), u64> = HashMap::new();
        for (syms, f) in &words {
            for w in syms.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_default() += f;
            }
        }
        let best = counts
            .into_iter()
            .filter(|((l, r), c)| *c >= 1 && !format!("{}{}", l.text(), r.text()).contains("@@"))
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let Some(((l, r), _)) = best else { break };
        let merged = l.merge(&r);
        for (syms, _) in &mut words {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = out;
        }
        rules.push((l, r));
    }
    rules
}

/// Random word-frequency corpus over a small alphabet.
pub fn random_corpus(seed: u64, max_types: u64, alphabet: &[char]) -> WordCounts {
    let mut r = rng::stream(seed, 0);
    let types = 1 + rng::below(&mut r, max_types);
    let mut wc = WordCounts::new();
    for _ in 0..types {
        let len = 1 + rng::below(&mut r, 8) as usize;
        let word: String = (0..len)
            .map(|_| alphabet[rng::below(&mut r, alphabet.len() as u64) as usize])
            .collect();
        wc.add_word(&word, 1 + rng::below(&mut r, 20));
    }
    wc
}

pub const MIXED_SCRIPT: &[&str] = &[
    "abcdefghijklmnopqrstuvwxyz",
    "कखगघचछजझटठडढणतथदधनपफबभमयरलवशसह",
    "ािीुूेैोौं्",
    "абвгдежзийклмнопрстуфхцчшщ",
    "的一是不了人我在有他这中大来上",
    "0123456789",
    ".,;:!?'\"()-@#<\\/",
];

/// Whitespace-normalized sentences mixing several scripts, with occasional
/// marker-like characters.
pub fn mixed_script_lines(seed: u64, n: usize) -> Vec<String> {
    let scripts: Vec<Vec<char>> = MIXED_SCRIPT.iter().map(|s| s.chars().collect()).collect();
    let mut r = rng::stream(seed, 1);
    (0..n)
        .map(|_| {
            let words = 1 + rng::below(&mut r, 15);
            (0..words)
                .map(|_| {
                    let script = &scripts[rng::below(&mut r, scripts.len() as u64) as usize];
                    // Keep a mostly-closed lexicon so merges have something to find.
                    let stem = rng::below(&mut r, 600);
                    let len = 1 + (stem % 9) as usize;
                    let mut w: String = (0..len)
                        .map(|k| script[((stem * 31 + k as u64 * (17 + stem % 5)) % script.len() as u64) as usize])
                        .collect();
                    if rng::below(&mut r, 50) == 0 {
                        w.push_str("@@");
                    }
                    w
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Independent sentence-level CHRF++ (char 1-6, word 1-2, beta 2), written
/// from the definition without sharing code with the library.
pub fn reference_chrf(hyp: &str, reference: &str) -> f64 {
    fn grams(items: &[String], n: usize) -> HashMap<String, usize> {
        let mut m = HashMap::new();
        if items.len() >= n {
            for w in items.windows(n) {
                *m.entry(w.join("\u{1}")).or_insert(0) += 1;
            }
        }
        m
    }
    let chars = |s: &str| -> Vec<String> { s.chars().filter(|c| !c.is_whitespace()).map(String::from).collect() };
    let words = |s: &str| -> Vec<String> { s.split_whitespace().map(String::from).collect() };
    let (hc, rc, hw, rw) = (chars(hyp), chars(reference), words(hyp), words(reference));
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    let orders = (1..=6).map(|n| (&hc, &rc, n)).chain((1..=2).map(|n| (&hw, &rw, n)));
    for (h, r, n) in orders {
        let (gh, gr) = (grams(h, n), grams(r, n));
        let th: usize = gh.values().sum();
        let tr: usize = gr.values().sum();
        if th == 0 && tr == 0 {
            continue;
        }
        let m: usize = gh.iter().map(|(g, c)| (*c).min(*gr.get(g).unwrap_or(&0))).sum();
        ps.push(if th == 0 { 0.0 } else { m as f64 / th as f64 });
        rs.push(if tr == 0 { 0.0 } else { m as f64 / tr as f64 });
    }
    if ps.is_empty() {
        return 0.0;
    }
    let p = ps.iter().sum::<f64>() / ps.len() as f64;
    let r = rs.iter().sum::<f64>() / rs.len() as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * r / (4.0 * p + r)
}

/// Writes a small aligned hi/en toy corpus: train, valid and one test set.
pub fn write_toy_corpus(dir: &Path, train: usize, test: usize, seed: u64) {
    let hi: Vec<char> = "कखगघचछजझटठ".chars().collect();
    let en = ["the", "a", "cat", "dog", "sat", "ran", "on", "under", "mat", "tree", "small", "house"];
    let mut r = rng::stream(seed, 2);
    for (split, n) in [("train", train), ("valid", 50), ("test", test)] {
        let mut h = String::new();
        let mut e = String::new();
        for _ in 0..n {
            let len = 1 + rng::below(&mut r, 25) as usize;
            let mut hs = Vec::new();
            let mut es = Vec::new();
            for _ in 0..len {
                let wid = rng::below(&mut r, en.len() as u64) as usize;
                es.push(en[wid].to_owned());
                hs.push((0..1 + wid % 4).map(|k| hi[(wid + k * 3) % hi.len()]).collect::<String>());
            }
            h.push_str(&hs.join(" "));
            h.push('\n');
            e.push_str(&es.join(" "));
            e.push('\n');
        }
        fs::write(dir.join(format!("{split}.hi")), h).unwrap();
        fs::write(dir.join(format!("{split}.en")), e).unwrap();
    }
}

/// Config JSON for the toy corpus.
pub fn toy_config(dir: &Path, size: u64, nmos: &str, backend: &str, extra: &str) -> PathBuf {
    let json = format!(
        r#"{{
  "schema": 1,
  "corpus": {{
    "train": {{"hi": "train.hi", "en": "train.en"}},
    "valid": {{"hi": "valid.hi", "en": "valid.en"}},
    "test": {{"toy": {{"hi": "test.hi", "en": "test.en"}}}}
  }},
  "directions": ["hi-en"],
  "sizes": [{size}],
  "nmo_set": {nmos},
  "backend": {backend},
  "output_dir": "out",
  "iterations": 200{extra}
}}"#
    );
    let path = dir.join("experiment.json");
    fs::write(&path, json).unwrap();
    path
}
