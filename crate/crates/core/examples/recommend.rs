//! NMO recommendations by training data size.

use asym_bpe::sweep::recommend;

fn main() {
    for size in [50_000, 100_000, 500_000, 1_000_000, 4_000_000, 8_000_000] {
        let r = recommend(size);
        println!("{size:>9}  {:6}  src {:12}  tgt {}", r.resource_band.to_string(), r.src_range.to_string(), r.tgt_range);
    }
    println!();
    println!("{}", recommend(100_000).rationale);
}
