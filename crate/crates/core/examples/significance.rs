//! Paired approximate randomization between two systems.

use asym_bpe::chrf::{paired_significance, BetterSystem, ChrfConfig};

fn main() -> asym_bpe::Result<()> {
    let refs: Vec<String> = (0..60).map(|i| format!("the quick brown fox jumps over dog number {i}")).collect();
    // A is right most of the time; B drops words.
    let a: Vec<String> = refs
        .iter()
        .enumerate()
        .map(|(i, r)| if i % 5 == 0 { r.replace("quick", "fast") } else { r.clone() })
        .collect();
    let b: Vec<String> = refs.iter().map(|r| r.replace("brown ", "").replace("over ", "")).collect();
    // C differs from A only slightly.
    let c: Vec<String> = a.iter().enumerate().map(|(i, s)| if i == 3 { s.replace("fox", "cat") } else { s.clone() }).collect();

    let cfg = ChrfConfig::default();
    for (name, other) in [("B", &b), ("C", &c)] {
        let r = paired_significance(&a, other, &refs, 2000, 12345, &cfg)?;
        let better = match r.better_system {
            BetterSystem::A => "A",
            BetterSystem::B => name,
            BetterSystem::Tie => "tie",
        };
        println!(
            "A {:.2} vs {name} {:.2}: p = {:.4} ({} iterations), better: {better}",
            r.score_a, r.score_b, r.p_value, r.iterations
        );
    }
    Ok(())
}
