//! How the segmented vocabulary and sequence length change with the number
//! of merge operations.

use asym_bpe::bpe::{apply_bpe, learn_bpe, vocabulary, WordCounts};
use asym_bpe::rng;

fn main() -> asym_bpe::Result<()> {
    // Synthetic Zipf-ish corpus built from a small syllable inventory.
    let syllables = ["ka", "ri", "to", "me", "su", "na", "lo", "pe", "chi", "ra"];
    let mut r = rng::stream(7, 0);
    let lines: Vec<String> = (0..2000)
        .map(|_| {
            (0..1 + rng::below(&mut r, 12))
                .map(|_| {
                    // Skewed draw from a 5000-word lexicon; frequent words are short.
                    let cap = 1 + rng::below(&mut r, 5000);
                    let stem = rng::below(&mut r, cap);
                    let mut h = stem.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    (0..1 + (stem * 5 / 5000 + stem % 2))
                        .map(|_| {
                            h = h.rotate_left(7) ^ 0x5bd1;
                            syllables[(h % 10) as usize]
                        })
                        .collect::<String>()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let counts = WordCounts::from_sentences(&lines);
    let full = learn_bpe(&counts, 4000)?;

    println!("{:>6} {:>8} {:>14}", "nmo", "vocab", "pieces/line");
    for nmo in [0, 50, 200, 500, 1000, 2000, full.nmo()] {
        let table = full.truncated(nmo);
        let vocab = vocabulary(&table, &counts).len();
        let pieces: usize = lines.iter().map(|l| apply_bpe(&table, l).pieces.len()).sum();
        println!("{nmo:>6} {vocab:>8} {:>14.2}", pieces as f64 / lines.len() as f64);
    }
    Ok(())
}
