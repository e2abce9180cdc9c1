//! Length-stratified sampling of parallel corpora.
//!
//! Sentence pairs are binned by source-side token count. A sample of a given
//! size keeps each bin's share of the full corpus: the bin's percentage
//! (rounded to hundredths) times the target size, floored to a configurable
//! granularity (10 by default).

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Upper bounds of the default bins: 1-10, 11-15, ..., 36-40, >=41.
pub const DEFAULT_UPPER_BOUNDS: [usize; 7] = [10, 15, 20, 25, 30, 35, 40];
pub const DEFAULT_GRANULARITY: u64 = 10;

/// Inclusive token-length range; `upper == None` is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBin {
    pub lower: usize,
    pub upper: Option<usize>,
}

impl LengthBin {
    pub fn contains(&self, len: usize) -> bool {
        len >= self.lower && self.upper.is_none_or(|u| len <= u)
    }

    /// Consecutive bins closed at each bound, plus a final open bin.
    pub fn from_upper_bounds(bounds: &[usize]) -> Result<Vec<LengthBin>> {
        let mut bins = Vec::with_capacity(bounds.len() + 1);
        let mut lower = 1;
        for &upper in bounds {
            if upper < lower {
                return Err(Error::InvalidBins(format!(
                    "bounds must be strictly increasing and positive, got {bounds:?}"
                )));
            }
            bins.push(LengthBin {
                lower,
                upper: Some(upper),
            });
            lower = upper + 1;
        }
        bins.push(LengthBin { lower, upper: None });
        Ok(bins)
    }

    pub fn default_bins() -> Vec<LengthBin> {
        Self::from_upper_bounds(&DEFAULT_UPPER_BOUNDS).expect("default bounds are valid")
    }
}

impl fmt::Display for LengthBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "{}-{}", self.lower, u),
            None => write!(f, ">={}", self.lower),
        }
    }
}

fn validate_bins(bins: &[LengthBin]) -> Result<()> {
    let Some(last) = bins.last() else {
        return Err(Error::InvalidBins("no bins".into()));
    };
    if last.upper.is_some() {
        return Err(Error::InvalidBins("final bin must be open-ended".into()));
    }
    let mut next = bins[0].lower;
    for b in bins {
        if b.lower != next || b.upper.is_some_and(|u| u < b.lower) {
            return Err(Error::InvalidBins(format!("bin {b} is not contiguous and ordered")));
        }
        next = b.upper.map_or(usize::MAX, |u| u + 1);
    }
    Ok(())
}

/// Bin for a sentence of `len` tokens. Lengths below the first bin (empty
/// lines) fall into the first bin.
fn bin_index(bins: &[LengthBin], len: usize) -> usize {
    bins.iter().position(|b| b.contains(len)).unwrap_or(0)
}

/// Source/target line pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    src: Vec<String>,
    tgt: Vec<String>,
}

impl ParallelCorpus {
    pub fn new(src: Vec<String>, tgt: Vec<String>) -> Result<Self> {
        if src.len() != tgt.len() {
            return Err(Error::LineCountMismatch {
                what: "source and target",
                left: src.len(),
                right: tgt.len(),
            });
        }
        Ok(Self { src, tgt })
    }

    pub fn read(src: &Path, tgt: &Path) -> Result<Self> {
        Self::new(read_lines(src)?, read_lines(tgt)?)
    }

    pub fn write(&self, src: &Path, tgt: &Path) -> Result<()> {
        write_lines(src, &self.src)?;
        write_lines(tgt, &self.tgt)
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn source(&self) -> &[String] {
        &self.src
    }

    pub fn target(&self) -> &[String] {
        &self.tgt
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.src.iter().map(String::as_str).zip(self.tgt.iter().map(String::as_str))
    }
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingPath(path.to_owned()),
        _ => e.into(),
    })?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(Error::from))
        .collect()
}

pub(crate) fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for l in lines {
        w.write_all(l.as_ref().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Distribution of a corpus over length bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPlan {
    pub bins: Vec<LengthBin>,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Share of `total` per bin in hundredths of a percent, rounded half up.
    pub basis_points: Vec<u32>,
}

impl BinPlan {
    pub fn from_counts(bins: Vec<LengthBin>, counts: Vec<u64>) -> Result<Self> {
        validate_bins(&bins)?;
        if bins.len() != counts.len() {
            return Err(Error::InvalidBins(format!(
                "{} bins but {} counts",
                bins.len(),
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        let basis_points = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0
                } else {
                    let num = u128::from(c) * 20_000 + u128::from(total);
                    (num / (2 * u128::from(total))) as u32
                }
            })
            .collect();
        Ok(Self {
            bins,
            counts,
            total,
            basis_points,
        })
    }

    /// Per-bin percentages, two decimals.
    pub fn percentages(&self) -> Vec<f64> {
        self.basis_points.iter().map(|&bp| f64::from(bp) / 100.0).collect()
    }
}

/// Assigns every pair to a bin by source token count.
pub fn bin_histogram(corpus: &ParallelCorpus, bins: &[LengthBin]) -> Result<BinPlan> {
    validate_bins(bins)?;
    let mut counts = vec![0u64; bins.len()];
    for src in corpus.source() {
        counts[bin_index(bins, src.split_whitespace().count())] += 1;
    }
    BinPlan::from_counts(bins.to_vec(), counts)
}

/// Per-bin sample sizes for one draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub bins: Vec<LengthBin>,
    pub target_size: u64,
    pub per_bin_quota: Vec<u64>,
    pub seed: u64,
    pub granularity: u64,
}

impl SamplePlan {
    pub fn sample_size(&self) -> u64 {
        self.per_bin_quota.iter().sum()
    }
}

/// Quotas proportional to the plan's rounded percentages, floored to
/// `granularity`. Sampling the whole corpus returns the bin counts as-is.
pub fn make_sample_plan(
    plan: &BinPlan,
    target_size: u64,
    seed: u64,
    granularity: u64,
) -> Result<SamplePlan> {
    if target_size > plan.total {
        return Err(Error::TargetTooLarge {
            target: target_size,
            total: plan.total,
        });
    }
    if granularity == 0 {
        return Err(Error::InvalidArgument("granularity must be at least 1".into()));
    }
    let per_bin_quota = if target_size == plan.total {
        plan.counts.clone()
    } else {
        plan.basis_points
            .iter()
            .zip(&plan.counts)
            .map(|(&bp, &available)| {
                let raw = (u128::from(bp) * u128::from(target_size) / 10_000) as u64;
                (raw / granularity * granularity).min(available)
            })
            .collect()
    };
    Ok(SamplePlan {
        bins: plan.bins.clone(),
        target_size,
        per_bin_quota,
        seed,
        granularity,
    })
}

/// Draws each bin's quota uniformly without replacement.
///
/// Bin `i` uses random substream `i` of the plan seed, with a partial
/// Fisher-Yates shuffle over the bin's line indices in corpus order. Output
/// is ordered by bin, then by draw.
pub fn draw_sample(corpus: &ParallelCorpus, plan: &SamplePlan) -> Result<ParallelCorpus> {
    Ok(corpus_from_indices(corpus, &draw_indices(corpus, plan)?))
}

/// Line indices selected by [`draw_sample`], in output order.
pub fn draw_indices(corpus: &ParallelCorpus, plan: &SamplePlan) -> Result<Vec<usize>> {
    validate_bins(&plan.bins)?;
    if plan.per_bin_quota.len() != plan.bins.len() {
        return Err(Error::InvalidBins("quota count does not match bins".into()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); plan.bins.len()];
    for (i, src) in corpus.source().iter().enumerate() {
        members[bin_index(&plan.bins, src.split_whitespace().count())].push(i);
    }
    let mut out = Vec::with_capacity(plan.sample_size() as usize);
    for (b, (pool, &quota)) in members.iter_mut().zip(&plan.per_bin_quota).enumerate() {
        if quota > pool.len() as u64 {
            return Err(Error::InfeasibleQuota {
                bin: plan.bins[b].to_string(),
                quota,
                available: pool.len() as u64,
            });
        }
        let mut rng = rng::stream(plan.seed, b as u64);
        let n = pool.len();
        for k in 0..quota as usize {
            let j = k + rng::below(&mut rng, (n - k) as u64) as usize;
            pool.swap(k, j);
            out.push(pool[k]);
        }
    }
    Ok(out)
}

fn corpus_from_indices(corpus: &ParallelCorpus, idx: &[usize]) -> ParallelCorpus {
    ParallelCorpus {
        src: idx.iter().map(|&i| corpus.src[i].clone()).collect(),
        tgt: idx.iter().map(|&i| corpus.tgt[i].clone()).collect(),
    }
}

/// Provenance written next to a drawn sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub bin_plan: BinPlan,
    pub sample_plan: SamplePlan,
    pub seed: u64,
    pub rng: String,
    pub source_lines: u64,
    pub sample_lines: u64,
}

#[derive(Debug, Clone)]
pub struct SampleOutput {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub manifest: PathBuf,
}

/// Bins, plans and draws a sample, writing `<prefix>.src`, `<prefix>.tgt`
/// and `<prefix>.json`.
pub fn sample_to_files(
    corpus: &ParallelCorpus,
    bins: &[LengthBin],
    size: u64,
    seed: u64,
    granularity: u64,
    out_prefix: &Path,
) -> Result<(SampleManifest, SampleOutput)> {
    let bin_plan = bin_histogram(corpus, bins)?;
    let sample_plan = make_sample_plan(&bin_plan, size, seed, granularity)?;
    let sample = draw_sample(corpus, &sample_plan)?;
    let with_ext = |ext: &str| {
        let mut p = out_prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    let out = SampleOutput {
        src: with_ext(".src"),
        tgt: with_ext(".tgt"),
        manifest: with_ext(".json"),
    };
    if let Some(dir) = out.src.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    sample.write(&out.src, &out.tgt)?;
    let manifest = SampleManifest {
        bin_plan,
        seed,
        rng: "chacha8 (seed le-bytes key, substream = bin index)".into(),
        source_lines: corpus.len() as u64,
        sample_lines: sample.len() as u64,
        sample_plan,
    };
    fs::write(&out.manifest, serde_json::to_string_pretty(&manifest)?)?;
    Ok((manifest, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(len: usize) -> String {
        vec!["w"; len].join(" ")
    }

    fn corpus_with_lengths(lengths: &[usize]) -> ParallelCorpus {
        let src: Vec<String> = lengths.iter().map(|&l| line(l)).collect();
        let tgt = (0..lengths.len()).map(|i| format!("t{i}")).collect();
        ParallelCorpus::new(src, tgt).unwrap()
    }

    #[test]
    fn default_bins_are_contiguous() {
        let bins = LengthBin::default_bins();
        let labels: Vec<String> = bins.iter().map(ToString::to_string).collect();
        assert_eq!(
            labels,
            ["1-10", "11-15", "16-20", "21-25", "26-30", "31-35", "36-40", ">=41"]
        );
    }

    #[test]
    fn histogram_assigns_by_source_length() {
        let corpus = corpus_with_lengths(&[2, 12, 50]);
        let plan = bin_histogram(&corpus, &LengthBin::default_bins()).unwrap();
        assert_eq!(plan.counts, vec![1, 1, 0, 0, 0, 0, 0, 1]);
        assert_eq!(plan.total, 3);
        assert_eq!(plan.basis_points[2], 0);
    }

    #[test]
    fn mismatched_lines_name_both_lengths() {
        let err = ParallelCorpus::new(vec!["a".into(); 3], vec!["b".into(); 2]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('2'), "{msg}");
    }

    #[test]
    fn rejects_bad_bins() {
        assert!(LengthBin::from_upper_bounds(&[10, 5]).is_err());
        let closed = vec![LengthBin {
            lower: 1,
            upper: Some(3),
        }];
        assert!(bin_histogram(&corpus_with_lengths(&[1]), &closed).is_err());
    }

    #[test]
    fn identity_sample_plan() {
        let corpus = corpus_with_lengths(&[1, 1, 3, 12, 12, 45]);
        let plan = bin_histogram(&corpus, &LengthBin::default_bins()).unwrap();
        let sp = make_sample_plan(&plan, plan.total, 1, 10).unwrap();
        assert_eq!(sp.per_bin_quota, plan.counts);
        let drawn = draw_sample(&corpus, &sp).unwrap();
        let mut got: Vec<_> = drawn.target().to_vec();
        let mut all: Vec<_> = corpus.target().to_vec();
        got.sort();
        all.sort();
        assert_eq!(got, all);
    }

    #[test]
    fn target_too_large() {
        let corpus = corpus_with_lengths(&[1, 2]);
        let plan = bin_histogram(&corpus, &LengthBin::default_bins()).unwrap();
        assert!(matches!(
            make_sample_plan(&plan, 3, 0, 10),
            Err(Error::TargetTooLarge { .. })
        ));
    }

    #[test]
    fn infeasible_quota_names_bin() {
        let corpus = corpus_with_lengths(&[1, 2]);
        let plan = SamplePlan {
            bins: LengthBin::default_bins(),
            target_size: 3,
            per_bin_quota: vec![0, 1, 0, 0, 0, 0, 0, 0],
            seed: 0,
            granularity: 1,
        };
        let err = draw_sample(&corpus, &plan).unwrap_err();
        assert!(err.to_string().contains("11-15"), "{err}");
    }

    #[test]
    fn draws_are_deterministic_and_seed_dependent() {
        let lengths: Vec<usize> = (0..400).map(|i| 1 + (i * 7) % 60).collect();
        let corpus = corpus_with_lengths(&lengths);
        let plan = bin_histogram(&corpus, &LengthBin::default_bins()).unwrap();
        let sp = make_sample_plan(&plan, 100, 42, 1).unwrap();
        let a = draw_sample(&corpus, &sp).unwrap();
        let b = draw_sample(&corpus, &sp).unwrap();
        assert_eq!(a, b);
        let other = make_sample_plan(&plan, 100, 43, 1).unwrap();
        assert_ne!(draw_sample(&corpus, &other).unwrap(), a);
    }
}
