use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use super::record::{write_atomic, ResultRow, RunStatus, RESULTS_HEADER};
use crate::error::{Error, Result};
use crate::sweep::{max_by_source, tier_report_with, BpeConfig, Direction, SystemResult, TierPolicy, TierReport};

/// (direction, size, test set): the unit tier reports are computed over.
pub type Cell = (Direction, u64, String);

pub const SUMMARY_HEADER: &str = "config\tsrc_nmo\ttgt_nmo\tdirection\tsize\ttestset\treps\tmean_chrf";
pub const MAX_TRACE_HEADER: &str = "direction\tsize\ttestset\tsrc_nmo\tbest_tgt_nmo\tchrf";

/// Mean corpus score of one configuration over completed repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config: BpeConfig,
    pub direction: Direction,
    pub size: u64,
    pub testset: String,
    pub reps: usize,
    pub mean_chrf: f64,
}

#[derive(Debug, Clone)]
pub struct CellReport {
    pub direction: Direction,
    pub size: u64,
    pub testset: String,
    /// `Some(r)` for a single repetition, `None` for the repetition mean.
    pub rep: Option<u32>,
    pub report: TierReport,
}

impl CellReport {
    pub fn stem(&self) -> String {
        let rep = self.rep.map_or("mean".to_owned(), |r| format!("rep{r}"));
        format!("{}_{}_{}_{rep}", self.direction, self.size, self.testset)
    }
}

/// Everything `emit_report` computed and where it was written.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub max_trace: PathBuf,
    pub summary_rows: Vec<SummaryRow>,
    pub tier_reports: Vec<CellReport>,
    /// Cells without a tier report, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Averages completed scores per (configuration, cell) across repetitions.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    type Key = (String, u64, String, BpeConfig);
    let mut acc: BTreeMap<Key, (Direction, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        if let (RunStatus::Completed, Some(c)) = (r.status, r.chrf) {
            acc.entry((r.direction.to_string(), r.size, r.testset.clone(), r.config))
                .or_insert_with(|| (r.direction.clone(), Vec::new()))
                .1
                .push(c);
        }
    }
    acc.into_iter()
        .map(|((_, size, testset, config), (direction, scores))| SummaryRow {
            config,
            direction,
            size,
            testset,
            reps: scores.len(),
            mean_chrf: scores.iter().sum::<f64>() / scores.len() as f64,
        })
        .collect()
}

/// Writes `results.tsv`, `summary.tsv`, `max_by_src.tsv` and per-cell tier
/// reports under `tiers/` into `out_dir`.
///
/// Tier reports are produced per repetition (with significance) and, when a
/// cell has more than one repetition, for the repetition mean (without).
/// Cells lacking a symmetric baseline or two asymmetric systems are skipped.
pub fn emit_report(rows: &[ResultRow], out_dir: &Path) -> Result<ReportBundle> {
    emit_report_with(rows, out_dir, TierPolicy::default())
}

pub fn emit_report_with(rows: &[ResultRow], out_dir: &Path, policy: TierPolicy) -> Result<ReportBundle> {
    if !rows.iter().any(|r| r.status == RunStatus::Completed && r.chrf.is_some()) {
        return Err(Error::NoCompletedRecords);
    }
    fs::create_dir_all(out_dir.join("tiers"))?;

    let mut results = String::from(RESULTS_HEADER);
    results.push('\n');
    for r in rows {
        results.push_str(&r.to_tsv());
        results.push('\n');
    }
    let results_path = out_dir.join("results.tsv");
    write_atomic(&results_path, results.as_bytes())?;

    let summary_rows = summarize(rows);
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for s in &summary_rows {
        let _ = writeln!(
            summary,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.2}",
            s.config, s.config.src_nmo, s.config.tgt_nmo, s.direction, s.size, s.testset, s.reps, s.mean_chrf
        );
    }
    let summary_path = out_dir.join("summary.tsv");
    write_atomic(&summary_path, summary.as_bytes())?;

    // Per-cell mean results feed the max trace and the mean tier report.
    let mut mean_cells: BTreeMap<String, Vec<SystemResult>> = BTreeMap::new();
    let mut rep_counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &summary_rows {
        let key = format!("{}_{}_{}", s.direction, s.size, s.testset);
        let n = rep_counts.entry(key.clone()).or_default();
        *n = (*n).max(s.reps);
        mean_cells.entry(key).or_default().push(SystemResult {
            config: s.config,
            direction: s.direction.clone(),
            dataset_size: s.size,
            testset: s.testset.clone(),
            score: s.mean_chrf,
            p_vs_baseline: None,
        });
    }

    let mut trace = String::from(MAX_TRACE_HEADER);
    trace.push('\n');
    for results in mean_cells.values() {
        let first = &results[0];
        for m in max_by_source(results) {
            let _ = writeln!(
                trace,
                "{}\t{}\t{}\t{}\t{}\t{:.2}",
                first.direction, first.dataset_size, first.testset, m.src_nmo, m.best_tgt_nmo, m.score
            );
        }
    }
    let trace_path = out_dir.join("max_by_src.tsv");
    write_atomic(&trace_path, trace.as_bytes())?;

    let mut rep_cells: BTreeMap<(String, u32), Vec<SystemResult>> = BTreeMap::new();
    for r in rows {
        if let Some(sr) = r.system_result() {
            let key = format!("{}_{}_{}", r.direction, r.size, r.testset);
            rep_cells.entry((key, r.rep)).or_default().push(sr);
        }
    }

    let mut tier_reports = Vec::new();
    let mut skipped = Vec::new();
    let mut attempt = |results: &[SystemResult], rep: Option<u32>| -> Result<()> {
        let first = &results[0];
        let cell = CellReport {
            direction: first.direction.clone(),
            size: first.dataset_size,
            testset: first.testset.clone(),
            rep,
            report: match tier_report_with(results, policy) {
                Ok(report) => report,
                Err(Error::InsufficientCoverage(why)) => {
                    let stem = format!(
                        "{}_{}_{}_{}",
                        first.direction,
                        first.dataset_size,
                        first.testset,
                        rep.map_or("mean".to_owned(), |r| format!("rep{r}"))
                    );
                    info!("no tier report for {stem}: {why}");
                    skipped.push((stem, why));
                    return Ok(());
                }
                Err(e) => return Err(e),
            },
        };
        let stem = cell.stem();
        write_atomic(&out_dir.join("tiers").join(format!("{stem}.tsv")), cell.report.to_tsv().as_bytes())?;
        write_atomic(&out_dir.join("tiers").join(format!("{stem}.txt")), cell.report.to_text().as_bytes())?;
        tier_reports.push(cell);
        Ok(())
    };
    for ((_, rep), results) in &rep_cells {
        attempt(results, Some(*rep))?;
    }
    for (key, results) in &mean_cells {
        if rep_counts[key] > 1 {
            attempt(results, None)?;
        }
    }

    Ok(ReportBundle {
        results: results_path,
        summary: summary_path,
        max_trace: trace_path,
        summary_rows,
        tier_reports,
        skipped,
    })
}

/// Selects the completed results of one cell, for ad-hoc tier reports.
pub fn cell_results(rows: &[ResultRow], direction: &Direction, size: u64, testset: &str, rep: u32) -> Vec<SystemResult> {
    rows.iter()
        .filter(|r| &r.direction == direction && r.size == size && r.testset == testset && r.rep == rep)
        .filter_map(ResultRow::system_result)
        .collect()
}

/// Distinct cells present in `rows`, in sorted order.
pub fn cells(rows: &[ResultRow]) -> Vec<Cell> {
    let mut out: Vec<Cell> = rows
        .iter()
        .map(|r| (r.direction.clone(), r.size, r.testset.clone()))
        .collect();
    out.sort_by(|a, b| (a.0.to_string(), a.1, &a.2).cmp(&(b.0.to_string(), b.1, &b.2)));
    out.dedup();
    out
}
