//! Learn a merge table, segment text with it, and undo the segmentation.

use asym_bpe::bpe::{apply_bpe, learn_bpe, unsegment_line, MergeTable, WordCounts};

fn main() -> asym_bpe::Result<()> {
    let corpus = [
        "the lower newer lowest widest",
        "newer lower wider",
        "low lower lowest",
        "नया नए नई नयी",
    ];
    let counts = WordCounts::from_sentences(corpus);
    let table = learn_bpe(&counts, 12)?;

    println!("{} merges:", table.nmo());
    for (i, rule) in table.rules().iter().enumerate() {
        println!("  {:2}  {} + {} -> {}", i + 1, rule.left, rule.right, rule.merged());
    }

    // Tables serialize to a plain-text format and read back identically.
    let text = table.to_text();
    assert_eq!(MergeTable::from_text(&text)?, table);

    for line in ["the lowest newer one", "नए लोग"] {
        let seg = apply_bpe(&table, line).to_string();
        println!("{line:24} => {seg}");
        assert_eq!(unsegment_line(&seg)?, line);
    }

    // Any prefix of a table is the table learned with fewer merges.
    assert_eq!(table.truncated(5), learn_bpe(&counts, 5)?);
    Ok(())
}
