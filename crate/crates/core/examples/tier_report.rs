//! Summarize a configuration grid into baseline / High / Low tiers.

use asym_bpe::sweep::{enumerate_grid, max_by_source, tier_report, BpeConfig, Direction, SystemResult};

fn main() -> asym_bpe::Result<()> {
    let grid = enumerate_grid(&[500, 1000, 2000, 4000, 8000])?;
    // A made-up score surface: more source merges help, more target merges hurt.
    let score = |c: &BpeConfig| {
        let s = (c.src_nmo as f64).log2();
        let t = (c.tgt_nmo as f64).log2();
        20.0 + 1.5 * s - 1.2 * (t - 9.0).abs() - 0.1 * (s - 12.0).powi(2)
    };
    let results: Vec<SystemResult> = grid
        .iter()
        .map(|c| SystemResult {
            config: *c,
            direction: Direction::new("hi", "en"),
            dataset_size: 100_000,
            testset: "dev".into(),
            score: score(c),
            // Pretend every asymmetric system was tested against the baseline.
            p_vs_baseline: Some(if c.is_symmetric() { 1.0 } else { 0.003 }),
        })
        .collect();

    let report = tier_report(&results)?;
    print!("{}", report.to_text());
    println!();
    println!("best target NMO per source NMO:");
    for m in max_by_source(&results) {
        println!("  src {:>5} -> tgt {:>5}  {:.2}", m.src_nmo, m.best_tgt_nmo, m.score);
    }
    Ok(())
}
