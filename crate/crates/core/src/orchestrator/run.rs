use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{Backend, BackendJob};
use super::config::ExperimentConfig;
use super::record::{self, read_results, write_atomic, Artifacts, RunRecord, RunStatus};
use crate::bpe::{apply_bpe, learn_bpe, unsegment_lenient, MergeTable, WordCounts};
use crate::chrf::{corpus_stats, score_from_totals, significance_from_stats, sum_stats, NGramStats};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sampler::{bin_histogram, draw_indices, make_sample_plan, read_lines, write_lines, ParallelCorpus};
use crate::sweep::{BpeConfig, Direction};

/// Choices the pipeline makes on the user's behalf, copied into every run manifest.
pub const ASSUMPTIONS: [&str; 4] = [
    "validation data is segmented with the same per-configuration merge tables as training data",
    "hypotheses are de-segmented leniently (a trailing continuation marker is dropped) before scoring against the raw reference",
    "p_vs_baseline compares each configuration with the best symmetric configuration of its cell",
    "repetition seeds are seed + repetition index; sampling and significance consume substreams of that seed",
];

/// Directory layout of a sweep output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.tsv")
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    fn data(&self, size: u64, rep: u32) -> PathBuf {
        self.root.join("data").join(format!("size{size}")).join(format!("rep{rep}"))
    }

    pub fn sample(&self, size: u64, rep: u32, lang: &str) -> PathBuf {
        self.data(size, rep).join(format!("train.{lang}"))
    }

    pub fn table(&self, lang: &str, size: u64, rep: u32, nmo: u32) -> PathBuf {
        self.root
            .join("tables")
            .join(lang)
            .join(format!("size{size}"))
            .join(format!("rep{rep}"))
            .join(format!("nmo{nmo}.bpe"))
    }

    fn segmented_dir(&self, lang: &str, size: u64, rep: u32, nmo: u32) -> PathBuf {
        self.root
            .join("segmented")
            .join(lang)
            .join(format!("size{size}"))
            .join(format!("rep{rep}"))
            .join(format!("nmo{nmo}"))
    }

    pub fn segmented(&self, lang: &str, size: u64, rep: u32, nmo: u32, split: &str) -> PathBuf {
        self.segmented_dir(lang, size, rep, nmo).join(format!("{split}.txt"))
    }

    pub fn run_dir(&self, direction: &Direction, size: u64, rep: u32, config: BpeConfig) -> PathBuf {
        self.runs()
            .join(direction.to_string())
            .join(format!("size{size}"))
            .join(format!("rep{rep}"))
            .join(config.label())
    }

    pub fn record(&self, direction: &Direction, size: u64, rep: u32, config: BpeConfig, testset: &str) -> PathBuf {
        self.run_dir(direction, size, rep, config)
            .join(format!("record.{testset}.json"))
    }
}

/// Provenance for a whole sweep, written to `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub tool: String,
    pub version: String,
    pub backend: String,
    pub assumptions: Vec<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Continue an existing output directory instead of refusing to touch it.
    pub resume: bool,
    /// Overrides the config's worker limit.
    pub workers: Option<usize>,
}

/// Runs a sweep with the backend named in the config.
pub fn run_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<RunRecord>> {
    let backend = cfg.backend.build()?;
    run_sweep_with_backend(cfg, backend.as_ref(), opts)
}

/// Runs every planned (configuration, test set) job and returns all records,
/// including ones completed by earlier invocations.
pub fn run_sweep_with_backend(
    cfg: &ExperimentConfig,
    backend: &dyn Backend,
    opts: RunOptions,
) -> Result<Vec<RunRecord>> {
    let layout = Layout::new(&cfg.output_dir);
    prepare_output(cfg, &layout, backend, opts.resume)?;
    let workers = opts.workers.unwrap_or(cfg.workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let persisted = persisted_keys(&layout)?;
    let sweep = Sweep {
        cfg,
        layout: &layout,
        backend,
        persisted,
        tsv: Mutex::new(()),
    };
    let mut all = Vec::new();
    for &size in &cfg.sizes {
        for rep in 0..cfg.repetitions {
            let records = pool.install(|| sweep.run_cell_group(size, rep))?;
            all.extend(records);
        }
    }
    Ok(all)
}

fn prepare_output(cfg: &ExperimentConfig, layout: &Layout, backend: &dyn Backend, resume: bool) -> Result<()> {
    let existing = layout.results().exists() || layout.manifest().exists();
    if existing && !resume {
        return Err(Error::InvalidArgument(format!(
            "{} already contains a sweep; pass --resume to continue it",
            layout.root.display()
        )));
    }
    if existing {
        let text = fs::read_to_string(layout.manifest())?;
        let old: SweepManifest = serde_json::from_str(&text)?;
        check_resumable(&old.config, cfg)?;
    }
    fs::create_dir_all(&layout.root)?;
    let manifest = SweepManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        backend: backend.name(),
        assumptions: ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
        config: cfg.clone(),
    };
    write_atomic(&layout.manifest(), serde_json::to_string_pretty(&manifest)?.as_bytes())
}

/// Settings that determine already-persisted artifacts must not change
/// between a run and its resumption.
fn check_resumable(old: &ExperimentConfig, new: &ExperimentConfig) -> Result<()> {
    let mismatch = |field: &str| {
        Err(Error::Config {
            field: field.to_owned(),
            message: "differs from the run being resumed".into(),
        })
    };
    if old.corpus != new.corpus {
        return mismatch("corpus");
    }
    if old.seed != new.seed {
        return mismatch("seed");
    }
    if old.bins != new.bins || old.granularity != new.granularity {
        return mismatch("bins");
    }
    if old.sample_language() != new.sample_language() {
        return mismatch("sample_by");
    }
    if old.chrf_config() != new.chrf_config() {
        return mismatch("chrf");
    }
    if old.iterations != new.iterations {
        return mismatch("iterations");
    }
    Ok(())
}

type RowKey = (BpeConfig, String, u64, u32, String);

fn persisted_keys(layout: &Layout) -> Result<HashSet<RowKey>> {
    if !layout.results().exists() {
        return Ok(HashSet::new());
    }
    Ok(read_results(&layout.results())?
        .into_iter()
        .map(|r| (r.config, r.direction.to_string(), r.size, r.rep, r.testset))
        .collect())
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Sweep<'a> {
    cfg: &'a ExperimentConfig,
    layout: &'a Layout,
    backend: &'a dyn Backend,
    persisted: HashSet<RowKey>,
    tsv: Mutex<()>,
}

impl Sweep<'_> {
    fn run_cell_group(&self, size: u64, rep: u32) -> Result<Vec<RunRecord>> {
        let seed = derive_seed(self.cfg.seed, rep);
        info!("size {size} rep {rep}: preparing data (seed {seed})");
        self.write_sample(size, rep, seed)?;
        self.write_tables_and_segments(size, rep)?;

        let grid = self.cfg.grid();
        let mut records = Vec::new();
        for direction in &self.cfg.directions {
            let jobs: Vec<(BpeConfig, &String)> = grid
                .iter()
                .flat_map(|&c| self.cfg.corpus.test.keys().map(move |t| (c, t)))
                .collect();
            let done: Vec<RunRecord> = jobs
                .par_iter()
                .map(|&(config, testset)| self.run_job(direction, size, rep, seed, config, testset))
                .collect::<Result<_>>()?;
            for testset in self.cfg.corpus.test.keys() {
                let cell: Vec<RunRecord> = done.iter().filter(|r| &r.testset == testset).cloned().collect();
                records.extend(self.finalize_cell(cell, seed)?);
            }
        }
        Ok(records)
    }

    /// Stratified sample shared by every direction and configuration.
    fn write_sample(&self, size: u64, rep: u32, seed: u64) -> Result<()> {
        let langs = self.cfg.languages();
        if langs.iter().all(|l| self.layout.sample(size, rep, l).exists()) {
            return Ok(());
        }
        let sample_lang = self.cfg.sample_language();
        let mut lines: BTreeMap<&String, Vec<String>> = BTreeMap::new();
        for lang in &langs {
            lines.insert(lang, read_lines(&self.cfg.corpus.train[lang])?);
        }
        let by = &lines[&sample_lang];
        for l in lines.values() {
            if l.len() != by.len() {
                return Err(Error::LineCountMismatch {
                    what: "training files of different languages",
                    left: by.len(),
                    right: l.len(),
                });
            }
        }
        let probe = ParallelCorpus::new(by.clone(), vec![String::new(); by.len()])?;
        let bins = self.cfg.length_bins();
        let bin_plan = bin_histogram(&probe, &bins)?;
        let plan = make_sample_plan(&bin_plan, size, seed, self.cfg.granularity)?;
        let idx = draw_indices(&probe, &plan)?;
        let dir = self.layout.data(size, rep);
        fs::create_dir_all(&dir)?;
        let manifest = serde_json::json!({
            "sample_by": sample_lang,
            "bin_plan": bin_plan,
            "sample_plan": plan,
            "source_lines": by.len(),
            "sample_lines": idx.len(),
        });
        write_atomic(&dir.join("sample.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        for (lang, l) in &lines {
            let picked: Vec<&str> = idx.iter().map(|&i| l[i].as_str()).collect();
            write_lines_atomic(&self.layout.sample(size, rep, lang), &picked)?;
        }
        info!("size {size} rep {rep}: sampled {} of {} pairs", idx.len(), by.len());
        Ok(())
    }

    /// One table per (language, NMO), truncated from the largest so that
    /// every table is the prefix of the next; then every split segmented.
    fn write_tables_and_segments(&self, size: u64, rep: u32) -> Result<()> {
        let nmos = &self.cfg.nmo_set;
        let max = *nmos.iter().max().expect("validated");
        let langs: Vec<String> = self.cfg.languages().into_iter().collect();
        langs.par_iter().try_for_each(|lang| -> Result<()> {
            let missing = nmos.iter().any(|&n| !self.layout.table(lang, size, rep, n).exists());
            if !missing {
                return Ok(());
            }
            let train = read_lines(&self.layout.sample(size, rep, lang))?;
            let counts = WordCounts::from_sentences(&train);
            let full = learn_bpe(&counts, max as usize)?;
            if full.nmo() < max as usize {
                warn!("{lang}: only {} merges available, requested up to {max}", full.nmo());
            }
            for &n in nmos {
                let table = full.truncated(n as usize);
                write_atomic(&self.layout.table(lang, size, rep, n), table.to_text().as_bytes())?;
            }
            Ok(())
        })?;

        let work: Vec<(&String, u32)> = langs.iter().flat_map(|l| nmos.iter().map(move |&n| (l, n))).collect();
        work.par_iter().try_for_each(|&(lang, nmo)| -> Result<()> {
            let mut splits: Vec<(String, PathBuf)> = vec![
                ("train".into(), self.layout.sample(size, rep, lang)),
                ("valid".into(), self.cfg.corpus.valid[lang].clone()),
            ];
            for (name, files) in &self.cfg.corpus.test {
                splits.push((format!("test.{name}"), files[lang].clone()));
            }
            if splits
                .iter()
                .all(|(s, _)| self.layout.segmented(lang, size, rep, nmo, s).exists())
            {
                return Ok(());
            }
            let table = MergeTable::from_text(&fs::read_to_string(self.layout.table(lang, size, rep, nmo))?)?;
            for (split, input) in splits {
                let out = self.layout.segmented(lang, size, rep, nmo, &split);
                if out.exists() {
                    continue;
                }
                let seg: Vec<String> = read_lines(&input)?
                    .iter()
                    .map(|l| apply_bpe(&table, l).to_string())
                    .collect();
                write_lines_atomic(&out, &seg)?;
            }
            Ok(())
        })
    }

    fn run_job(
        &self,
        direction: &Direction,
        size: u64,
        rep: u32,
        seed: u64,
        config: BpeConfig,
        testset: &str,
    ) -> Result<RunRecord> {
        let record_path = self.layout.record(direction, size, rep, config, testset);
        if record_path.exists() {
            let old = RunRecord::load(&record_path)?;
            if old.is_completed() {
                return Ok(old);
            }
        }
        let l = self.layout;
        let (s, t) = (config.src_nmo, config.tgt_nmo);
        let (sl, tl) = (direction.src.as_str(), direction.tgt.as_str());
        let run_dir = l.run_dir(direction, size, rep, config);
        let model_dir = run_dir.join("model");
        fs::create_dir_all(&model_dir)?;
        let test_split = format!("test.{testset}");
        let job = BackendJob {
            config,
            direction: direction.clone(),
            size,
            rep,
            testset: testset.to_owned(),
            train_src: l.segmented(sl, size, rep, s, "train"),
            train_tgt: l.segmented(tl, size, rep, t, "train"),
            valid_src: l.segmented(sl, size, rep, s, "valid"),
            valid_tgt: l.segmented(tl, size, rep, t, "valid"),
            test_src: l.segmented(sl, size, rep, s, &test_split),
            test_tgt: l.segmented(tl, size, rep, t, &test_split),
            model_dir: model_dir.clone(),
            hyp_out: run_dir.join(format!("hyp.{testset}.txt")),
            log_path: run_dir.join(format!("backend.{testset}.log")),
        };
        let reference = self.cfg.corpus.test[testset][tl].clone();
        let artifacts = Artifacts {
            src_table: l.table(sl, size, rep, s),
            tgt_table: l.table(tl, size, rep, t),
            train_src: job.train_src.clone(),
            train_tgt: job.train_tgt.clone(),
            valid_src: job.valid_src.clone(),
            valid_tgt: job.valid_tgt.clone(),
            test_src: job.test_src.clone(),
            reference: reference.clone(),
            model_dir,
            hypothesis: job.hyp_out.clone(),
        };
        let _ = fs::remove_file(&job.hyp_out);
        let started_at = now();
        let outcome = self.backend.run(&job);
        let mut record = RunRecord {
            config,
            direction: direction.clone(),
            size,
            rep,
            testset: testset.to_owned(),
            seed,
            started_at,
            finished_at: 0.0,
            status: RunStatus::Failed,
            exit_status: None,
            failure: None,
            chrf: None,
            p_vs_baseline: None,
            finalized: false,
            artifacts,
        };
        match outcome {
            Ok(code) => {
                record.exit_status = Some(code);
                match self.score(&job.hyp_out, &reference, &detok_path(&job.hyp_out)) {
                    Ok(score) => {
                        record.status = RunStatus::Completed;
                        record.chrf = Some(score);
                    }
                    Err(e) => record.failure = Some(e.to_string()),
                }
            }
            Err(f) => {
                record.exit_status = f.exit_status;
                record.failure = Some(f.reason);
            }
        }
        record.finished_at = now();
        match &record.failure {
            Some(reason) => warn!("{direction} size {size} rep {rep} {config} {testset}: failed: {reason}"),
            None => info!(
                "{direction} size {size} rep {rep} {config} {testset}: chrF++ {:.2}",
                record.chrf.unwrap_or_default()
            ),
        }
        record.save(&record_path)?;
        Ok(record)
    }

    /// De-segments the hypothesis, keeps the plain text for significance
    /// testing and returns the corpus CHRF++.
    fn score(&self, hyp_path: &Path, reference: &Path, detok: &Path) -> Result<f64> {
        let hyp = read_lines(hyp_path).map_err(|e| match e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                Error::Backend(format!("no hypothesis file at {}", hyp_path.display()))
            }
            e => e,
        })?;
        let refs = read_lines(reference)?;
        if hyp.len() != refs.len() {
            return Err(Error::LineCountMismatch {
                what: "hypothesis and test reference",
                left: hyp.len(),
                right: refs.len(),
            });
        }
        let plain: Vec<String> = hyp.iter().map(|h| unsegment_lenient(h)).collect();
        write_lines_atomic(detok, &plain)?;
        let cfg = self.cfg.chrf_config();
        let stats = corpus_stats(&plain, &refs, &cfg)?;
        if stats.is_empty() {
            return Err(Error::EmptyStats);
        }
        Ok(score_from_totals(&sum_stats(&stats), cfg.beta))
    }

    /// Tests every completed record of one (direction, size, rep, test set)
    /// cell against the cell's best symmetric system, then persists the cell.
    fn finalize_cell(&self, mut cell: Vec<RunRecord>, seed: u64) -> Result<Vec<RunRecord>> {
        let already = cell.iter().all(|r| {
            r.finalized
                && self.persisted.contains(&(
                    r.config,
                    r.direction.to_string(),
                    r.size,
                    r.rep,
                    r.testset.clone(),
                ))
        });
        if already {
            return Ok(cell);
        }
        let baseline = cell
            .iter()
            .filter(|r| r.is_completed() && r.config.is_symmetric())
            .max_by(|a, b| {
                let (sa, sb) = (a.chrf.unwrap_or(f64::MIN), b.chrf.unwrap_or(f64::MIN));
                sa.total_cmp(&sb).then(b.config.cmp(&a.config))
            })
            .map(|r| r.config);

        if let Some(base) = baseline {
            let cfg = self.cfg.chrf_config();
            let refs_path = &cell.iter().find(|r| r.config == base).expect("baseline").artifacts.reference;
            let refs = read_lines(refs_path)?;
            let stats_of = |r: &RunRecord| -> Result<Vec<NGramStats>> {
                let hyp = read_lines(&detok_path(&r.artifacts.hypothesis))?;
                corpus_stats(&hyp, &refs, &cfg)
            };
            let base_stats = stats_of(cell.iter().find(|r| r.config == base).expect("baseline"))?;
            let iterations = self.cfg.iterations;
            let ps: Vec<Option<f64>> = cell
                .par_iter()
                .map(|r| -> Result<Option<f64>> {
                    if !r.is_completed() {
                        return Ok(None);
                    }
                    if r.config == base {
                        return Ok(Some(1.0));
                    }
                    let stats = stats_of(r)?;
                    let sig = significance_from_stats(&stats, &base_stats, iterations, seed, cfg.beta)?;
                    Ok(Some(sig.p_value))
                })
                .collect::<Result<_>>()?;
            for (r, p) in cell.iter_mut().zip(ps) {
                r.p_vs_baseline = p;
            }
        } else {
            for r in &mut cell {
                r.p_vs_baseline = None;
            }
        }

        cell.sort_by_key(|r| r.config);
        let rows: Vec<String> = cell.iter().map(RunRecord::tsv_row).collect();
        {
            let _guard = self.tsv.lock().unwrap_or_else(|e| e.into_inner());
            record::append_rows(&self.layout.results(), &rows)?;
        }
        for r in &mut cell {
            r.finalized = true;
            r.save(&self.layout.record(&r.direction, r.size, r.rep, r.config, &r.testset))?;
        }
        Ok(cell)
    }
}

fn detok_path(hyp: &Path) -> PathBuf {
    hyp.with_extension("detok.txt")
}

fn write_lines_atomic<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write_lines(&tmp, lines)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads every run record under an output directory, sorted by cell then
/// configuration.
pub fn load_records(root: &Path) -> Result<Vec<RunRecord>> {
    let runs = Layout::new(root).runs();
    if !runs.exists() {
        return Err(Error::MissingPath(runs));
    }
    let mut out = Vec::new();
    let mut stack = vec![runs];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("record.") && n.ends_with(".json"))
            {
                out.push(RunRecord::load(&path)?);
            }
        }
    }
    out.sort_by(|a, b| {
        (a.direction.to_string(), a.size, a.rep, &a.testset, a.config)
            .cmp(&(b.direction.to_string(), b.size, b.rep, &b.testset, b.config))
    });
    Ok(out)
}
