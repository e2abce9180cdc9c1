use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{BpeConfig, Direction, SystemResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifacts {
    pub src_table: PathBuf,
    pub tgt_table: PathBuf,
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    pub valid_src: PathBuf,
    pub valid_tgt: PathBuf,
    pub test_src: PathBuf,
    pub reference: PathBuf,
    pub model_dir: PathBuf,
    pub hypothesis: PathBuf,
}

/// Outcome of one (configuration, test set) job.
///
/// A completed record carries a score; a failed one carries a reason and
/// no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: BpeConfig,
    pub direction: Direction,
    pub size: u64,
    pub rep: u32,
    pub testset: String,
    pub seed: u64,
    pub started_at: f64,
    pub finished_at: f64,
    pub status: RunStatus,
    pub exit_status: Option<i32>,
    pub failure: Option<String>,
    pub chrf: Option<f64>,
    pub p_vs_baseline: Option<f64>,
    /// Set once significance has been computed and the TSV row appended.
    pub finalized: bool,
    pub artifacts: Artifacts,
}

impl RunRecord {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn system_result(&self) -> Option<SystemResult> {
        Some(SystemResult {
            config: self.config,
            direction: self.direction.clone(),
            dataset_size: self.size,
            testset: self.testset.clone(),
            score: self.chrf?,
            p_vs_baseline: self.p_vs_baseline,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn tsv_row(&self) -> String {
        ResultRow::from(self).to_tsv()
    }
}

/// Writes through a sibling temp file and renames into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub const RESULTS_HEADER: &str =
    "config\tsrc_nmo\ttgt_nmo\tdirection\tsize\trep\ttestset\tchrf\tp_vs_baseline\tstatus";

/// One line of `results.tsv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config: BpeConfig,
    pub direction: Direction,
    pub size: u64,
    pub rep: u32,
    pub testset: String,
    pub chrf: Option<f64>,
    pub p_vs_baseline: Option<f64>,
    pub status: RunStatus,
}

impl From<&RunRecord> for ResultRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            config: r.config,
            direction: r.direction.clone(),
            size: r.size,
            rep: r.rep,
            testset: r.testset.clone(),
            chrf: r.chrf,
            p_vs_baseline: r.p_vs_baseline,
            status: r.status,
        }
    }
}

impl ResultRow {
    pub fn to_tsv(&self) -> String {
        let na = |v: Option<String>| v.unwrap_or_else(|| "NA".to_owned());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.config,
            self.config.src_nmo,
            self.config.tgt_nmo,
            self.direction,
            self.size,
            self.rep,
            self.testset,
            na(self.chrf.map(|c| format!("{c:.2}"))),
            na(self.p_vs_baseline.map(|p| format!("{p:.6}"))),
            self.status.as_str(),
        )
    }

    pub fn parse(line: &str, lineno: usize) -> Result<Self> {
        let bad = |message: String| Error::ResultsFormat {
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(bad(format!("expected 10 columns, found {}", cols.len())));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s == "NA" || s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("bad number {s:?}")))
            }
        };
        let config = BpeConfig::new(
            cols[1].parse().map_err(|_| bad(format!("bad src_nmo {:?}", cols[1])))?,
            cols[2].parse().map_err(|_| bad(format!("bad tgt_nmo {:?}", cols[2])))?,
        );
        let status = match cols[9] {
            "completed" => RunStatus::Completed,
            "failed" => RunStatus::Failed,
            s => return Err(bad(format!("bad status {s:?}"))),
        };
        Ok(Self {
            config,
            direction: cols[3].parse()?,
            size: cols[4].parse().map_err(|_| bad(format!("bad size {:?}", cols[4])))?,
            rep: cols[5].parse().map_err(|_| bad(format!("bad rep {:?}", cols[5])))?,
            testset: cols[6].to_owned(),
            chrf: opt(cols[7])?,
            p_vs_baseline: opt(cols[8])?,
            status,
        })
    }

    pub fn system_result(&self) -> Option<SystemResult> {
        if self.status != RunStatus::Completed {
            return None;
        }
        Some(SystemResult {
            config: self.config,
            direction: self.direction.clone(),
            dataset_size: self.size,
            testset: self.testset.clone(),
            score: self.chrf?,
            p_vs_baseline: self.p_vs_baseline,
        })
    }

    fn key(&self) -> (BpeConfig, &Direction, u64, u32, &str) {
        (self.config, &self.direction, self.size, self.rep, &self.testset)
    }
}

/// Appends rows, writing the header first if the file is new.
pub fn append_rows(path: &Path, rows: &[String]) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    if fresh {
        buf.push_str(RESULTS_HEADER);
        buf.push('\n');
    }
    for r in rows {
        buf.push_str(r);
        buf.push('\n');
    }
    f.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads `results.tsv`. Later rows for the same run replace earlier ones.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingPath(path.to_owned()),
        _ => e.into(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => {
            return Err(Error::ResultsFormat {
                line: 1,
                message: "missing results header".into(),
            })
        }
    }
    let mut rows: Vec<ResultRow> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = ResultRow::parse(line, i + 1)?;
        match rows.iter().position(|r| r.key() == row.key()) {
            Some(pos) => rows[pos] = row,
            None => rows.push(row),
        }
    }
    Ok(rows)
}
