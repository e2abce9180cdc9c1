//! Sentence and corpus CHRF++ scores.

use asym_bpe::chrf::{corpus_chrf_lines, ChrfConfig};

fn main() -> asym_bpe::Result<()> {
    let cfg = ChrfConfig::default();
    let pairs = [
        ("the cat", "the cats"),
        ("the cat sat on the mat", "the cat sat on the mat"),
        ("a dog ran", "the cat sat"),
        ("बिल्ली चटाई पर बैठी", "बिल्ली चटाई पर बैठी थी"),
    ];
    for (hyp, reference) in pairs {
        let s = corpus_chrf_lines(&[hyp], &[reference], &cfg)?;
        println!("{:8.4}  {hyp:28} | {reference}", s.value);
    }

    // Corpus scores pool n-gram statistics; they are not a sentence average.
    let hyps: Vec<&str> = pairs.iter().map(|p| p.0).collect();
    let refs: Vec<&str> = pairs.iter().map(|p| p.1).collect();
    println!("corpus chrF++ = {}", corpus_chrf_lines(&hyps, &refs, &cfg)?.display());
    Ok(())
}
