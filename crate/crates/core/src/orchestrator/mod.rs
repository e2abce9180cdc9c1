//! End-to-end sweeps: sample, learn tables, segment, call the backend,
//! score and persist.

mod backend;
mod config;
mod record;
mod report;
mod run;

pub use backend::{
    Backend, BackendCommand, BackendFailure, BackendJob, BackendResult, BackendSpec, BuiltinBackend,
    EchoReference, IdentityCopy, PLACEHOLDERS,
};
pub use config::{CorpusPaths, ExperimentConfig, LanguageFiles, PlannedRun, DEFAULT_ITERATIONS, SCHEMA_VERSION};
pub use record::{append_rows, read_results, Artifacts, ResultRow, RunRecord, RunStatus, RESULTS_HEADER};
pub use report::{
    cell_results, cells, emit_report, emit_report_with, summarize, Cell, CellReport, ReportBundle, SummaryRow, MAX_TRACE_HEADER,
    SUMMARY_HEADER,
};
pub use run::{load_records, run_sweep, run_sweep_with_backend, Layout, RunOptions, SweepManifest, ASSUMPTIONS};
