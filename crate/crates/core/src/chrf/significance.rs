use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_lengths, corpus_stats, score_from_totals, sum_stats, ChrfConfig, NGramStats};
use crate::error::{Error, Result};
use crate::rng;

pub const METHOD: &str = "paired approximate randomization";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetterSystem {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub p_value: f64,
    pub iterations: usize,
    pub seed: u64,
    pub better_system: BetterSystem,
    pub score_a: f64,
    pub score_b: f64,
    pub method: String,
}

/// Paired approximate randomization over CHRF++.
///
/// Each iteration swaps every sentence's A/B outputs with probability 1/2
/// and rescores both pseudo-systems. `p = (c + 1) / (n + 1)` where `c` counts
/// iterations whose absolute score difference reaches the observed one.
/// Iteration `i` draws from substream `i` of `seed`, so the result does not
/// depend on thread scheduling.
pub fn paired_significance<S: AsRef<str> + Sync>(
    sys_a: &[S],
    sys_b: &[S],
    references: &[S],
    iterations: usize,
    seed: u64,
    cfg: &ChrfConfig,
) -> Result<SignificanceResult> {
    check_lengths("system A and system B", sys_a.len(), sys_b.len())?;
    let stats_a = corpus_stats(sys_a, references, cfg)?;
    let stats_b = corpus_stats(sys_b, references, cfg)?;
    significance_from_stats(&stats_a, &stats_b, iterations, seed, cfg.beta)
}

/// Same test on precomputed per-sentence statistics.
pub fn significance_from_stats(
    stats_a: &[NGramStats],
    stats_b: &[NGramStats],
    iterations: usize,
    seed: u64,
    beta: f64,
) -> Result<SignificanceResult> {
    check_lengths("system A and system B", stats_a.len(), stats_b.len())?;
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    if stats_a.is_empty() {
        return Err(Error::EmptyStats);
    }
    let score_a = score_from_totals(&sum_stats(stats_a), beta);
    let score_b = score_from_totals(&sum_stats(stats_b), beta);
    let observed = (score_a - score_b).abs();

    let hits: usize = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::SIGNIFICANCE_STREAM_BASE + i as u64);
            let mut ta = NGramStats::zeros(stats_a[0].orders.len());
            let mut tb = ta.clone();
            for (a, b) in stats_a.iter().zip(stats_b) {
                if rng::coin(&mut rng) {
                    ta += b;
                    tb += a;
                } else {
                    ta += a;
                    tb += b;
                }
            }
            let diff = (score_from_totals(&ta, beta) - score_from_totals(&tb, beta)).abs();
            usize::from(diff >= observed)
        })
        .sum();

    let better_system = if score_a > score_b {
        BetterSystem::A
    } else if score_b > score_a {
        BetterSystem::B
    } else {
        BetterSystem::Tie
    };
    Ok(SignificanceResult {
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        iterations,
        seed,
        better_system,
        score_a,
        score_b,
        method: METHOD.to_owned(),
    })
}
