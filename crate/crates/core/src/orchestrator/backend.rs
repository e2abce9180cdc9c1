//! Translation backends.
//!
//! A backend receives segmented training, validation and test files and must
//! write one hypothesis line per test line to `hyp_out`. Real backends are
//! shell command templates; two built-in mocks exist for pipeline testing.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{BpeConfig, Direction};

pub const PLACEHOLDERS: [&str; 7] = [
    "train_src",
    "train_tgt",
    "valid_src",
    "valid_tgt",
    "test_src",
    "model_dir",
    "hyp_out",
];

/// Everything a backend needs for one (configuration, test set) job.
#[derive(Debug, Clone)]
pub struct BackendJob {
    pub config: BpeConfig,
    pub direction: Direction,
    pub size: u64,
    pub rep: u32,
    pub testset: String,
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    pub valid_src: PathBuf,
    pub valid_tgt: PathBuf,
    /// Segmented test source.
    pub test_src: PathBuf,
    /// Segmented test target (used by the echo mock only).
    pub test_tgt: PathBuf,
    pub model_dir: PathBuf,
    pub hyp_out: PathBuf,
    pub log_path: PathBuf,
}

impl BackendJob {
    fn placeholder(&self, name: &str) -> &Path {
        match name {
            "train_src" => &self.train_src,
            "train_tgt" => &self.train_tgt,
            "valid_src" => &self.valid_src,
            "valid_tgt" => &self.valid_tgt,
            "test_src" => &self.test_src,
            "model_dir" => &self.model_dir,
            "hyp_out" => &self.hyp_out,
            _ => unreachable!("unknown placeholder {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendFailure {
    pub exit_status: Option<i32>,
    pub reason: String,
}

pub type BackendResult = std::result::Result<i32, BackendFailure>;

pub trait Backend: Send + Sync {
    fn name(&self) -> String;

    /// Trains (or reuses) a model and writes hypotheses. Returns the exit
    /// status on success.
    fn run(&self, job: &BackendJob) -> BackendResult;
}

fn io_failure(e: std::io::Error) -> BackendFailure {
    BackendFailure {
        exit_status: None,
        reason: e.to_string(),
    }
}

/// Emits the segmented test reference: every configuration scores 100.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoReference;

impl Backend for EchoReference {
    fn name(&self) -> String {
        "echo-reference".into()
    }

    fn run(&self, job: &BackendJob) -> BackendResult {
        fs::copy(&job.test_tgt, &job.hyp_out).map_err(io_failure)?;
        Ok(0)
    }
}

/// Emits the segmented test source unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCopy;

impl Backend for IdentityCopy {
    fn name(&self) -> String {
        "identity-copy".into()
    }

    fn run(&self, job: &BackendJob) -> BackendResult {
        fs::copy(&job.test_src, &job.hyp_out).map_err(io_failure)?;
        Ok(0)
    }
}

/// Shell command with `{placeholder}` slots, run through `sh -c`.
///
/// Substituted paths are single-quoted. Other braces (for example `${HOME}`)
/// are left to the shell, and the process inherits the environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendCommand {
    template: String,
    timeout: Option<Duration>,
}

impl BackendCommand {
    pub fn new(template: impl Into<String>, timeout: Option<Duration>) -> Result<Self> {
        let template = template.into();
        for name in PLACEHOLDERS {
            let uses = template.matches(&format!("{{{name}}}")).count();
            if uses > 1 {
                return Err(Error::InvalidArgument(format!(
                    "placeholder {{{name}}} used {uses} times"
                )));
            }
            if name == "hyp_out" && uses == 0 {
                return Err(Error::InvalidArgument(
                    "backend command must write to {hyp_out}".into(),
                ));
            }
        }
        Ok(Self { template, timeout })
    }

    pub fn render(&self, job: &BackendJob) -> String {
        let mut cmd = self.template.clone();
        for name in PLACEHOLDERS {
            let slot = format!("{{{name}}}");
            if cmd.contains(&slot) {
                cmd = cmd.replace(&slot, &shell_quote(&job.placeholder(name).to_string_lossy()));
            }
        }
        cmd
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl Backend for BackendCommand {
    fn name(&self) -> String {
        format!("command: {}", self.template)
    }

    fn run(&self, job: &BackendJob) -> BackendResult {
        let cmd = self.render(job);
        let log = fs::File::create(&job.log_path).map_err(io_failure)?;
        let log_err = log.try_clone().map_err(io_failure)?;
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(log_err)
            .spawn()
            .map_err(io_failure)?;
        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(io_failure)? {
                break status;
            }
            if self.timeout.is_some_and(|t| start.elapsed() > t) {
                let _ = child.kill();
                let _ = child.wait();
                return Err(BackendFailure {
                    exit_status: None,
                    reason: format!("timed out after {:?}", self.timeout.unwrap_or_default()),
                });
            }
            thread::sleep(Duration::from_millis(20));
        };
        match status.code() {
            Some(0) => Ok(0),
            code => Err(BackendFailure {
                exit_status: code,
                reason: format!(
                    "command exited with {} (log: {})",
                    code.map_or("a signal".to_owned(), |c| format!("status {c}")),
                    job.log_path.display()
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinBackend {
    EchoReference,
    IdentityCopy,
}

/// Backend section of the experiment config: exactly one of `builtin` or
/// `command`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinBackend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
}

impl BackendSpec {
    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Box<dyn Backend>> {
        match (&self.builtin, &self.command) {
            (Some(BuiltinBackend::EchoReference), None) => Ok(Box::new(EchoReference)),
            (Some(BuiltinBackend::IdentityCopy), None) => Ok(Box::new(IdentityCopy)),
            (None, Some(cmd)) => Ok(Box::new(BackendCommand::new(
                cmd.clone(),
                self.timeout_secs.map(Duration::from_secs),
            )?)),
            _ => Err(Error::InvalidArgument(
                "set exactly one of `builtin` or `command`".into(),
            )),
        }
    }
}
