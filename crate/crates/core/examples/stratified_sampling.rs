//! Length-stratified sampling: the sample keeps the corpus's distribution of
//! source sentence lengths.

use asym_bpe::rng;
use asym_bpe::sampler::{bin_histogram, draw_sample, make_sample_plan, LengthBin, ParallelCorpus};

fn main() -> asym_bpe::Result<()> {
    let mut r = rng::stream(1, 0);
    let n = 20_000;
    let src: Vec<String> = (0..n)
        .map(|_| {
            // Mostly short sentences with a long tail.
            let tail = 1 + rng::below(&mut r, 40);
            let len = 1 + rng::below(&mut r, 20) + rng::below(&mut r, tail);
            vec!["w"; len as usize].join(" ")
        })
        .collect();
    let tgt: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let corpus = ParallelCorpus::new(src, tgt)?;

    let bins = LengthBin::default_bins();
    let hist = bin_histogram(&corpus, &bins)?;
    let plan = make_sample_plan(&hist, 5_000, 42, 10)?;
    let sample = draw_sample(&corpus, &plan)?;
    let sample_hist = bin_histogram(&sample, &bins)?;

    println!("{:8} {:>8} {:>8} {:>8} {:>8}", "bin", "corpus", "%", "sample", "%");
    let (pc, ps) = (hist.percentages(), sample_hist.percentages());
    for (i, bin) in bins.iter().enumerate() {
        println!(
            "{:8} {:>8} {:>8.2} {:>8} {:>8.2}",
            bin.to_string(),
            hist.counts[i],
            pc[i],
            sample_hist.counts[i],
            ps[i]
        );
    }
    println!("sampled {} of {} requested", sample.len(), 5_000);
    Ok(())
}
