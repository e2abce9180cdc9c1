mod common;

use std::fs;

use asym_bpe::bpe::{learn_bpe, MergeTable, WordCounts};
use asym_bpe::orchestrator::{
    emit_report, load_records, read_results, run_sweep, ExperimentConfig, Layout, RunOptions, RunStatus,
    SweepManifest, ASSUMPTIONS,
};
use asym_bpe::sweep::Direction;
use asym_bpe::Error;

fn setup(nmos: &str, backend: &str, extra: &str) -> (tempfile::TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    common::write_toy_corpus(dir.path(), 300, 40, 3);
    let path = common::toy_config(dir.path(), 200, nmos, backend, extra);
    let cfg = ExperimentConfig::load(&path).unwrap();
    (dir, cfg)
}

#[test]
fn failing_backend_is_recorded_and_sweep_continues() {
    let (_dir, cfg) = setup("[20, 60]", r#"{"command": "echo broken >&2; exit 3 # {hyp_out}"}"#, "");
    let records = run_sweep(&cfg, RunOptions::default()).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        assert_eq!(r.status, RunStatus::Failed);
        assert_eq!(r.exit_status, Some(3));
        assert!(r.chrf.is_none());
        assert!(r.failure.as_deref().unwrap().contains("status 3"));
    }
    let rows = read_results(&Layout::new(&cfg.output_dir).results()).unwrap();
    assert!(rows.iter().all(|r| r.status == RunStatus::Failed && r.chrf.is_none()));
    let out = tempfile::tempdir().unwrap();
    assert!(matches!(emit_report(&rows, out.path()), Err(Error::NoCompletedRecords)));
}

#[test]
fn short_hypothesis_file_is_a_failure() {
    let (_dir, cfg) = setup("[20, 60]", r#"{"command": "head -n 3 {test_src} > {hyp_out}"}"#, "");
    let records = run_sweep(&cfg, RunOptions::default()).unwrap();
    assert!(records.iter().all(|r| r.status == RunStatus::Failed));
    assert!(records[0].failure.as_deref().unwrap().contains("3 lines vs 40 lines"));
}

#[test]
fn identity_command_on_copy_corpus_scores_100() {
    let dir = tempfile::tempdir().unwrap();
    common::write_toy_corpus(dir.path(), 300, 40, 4);
    // Make the reference equal to the source.
    for split in ["train", "valid", "test"] {
        fs::copy(dir.path().join(format!("{split}.hi")), dir.path().join(format!("{split}.en"))).unwrap();
    }
    let path = common::toy_config(dir.path(), 200, "[20, 60]", r#"{"command": "cp {test_src} {hyp_out}"}"#, "");
    let cfg = ExperimentConfig::load(&path).unwrap();
    let records = run_sweep(&cfg, RunOptions::default()).unwrap();
    assert!(records.iter().all(|r| r.chrf == Some(100.0)), "{records:?}");
}

#[test]
fn failed_jobs_are_retried_on_resume() {
    let dir = tempfile::tempdir().unwrap();
    common::write_toy_corpus(dir.path(), 300, 40, 5);
    let flag = dir.path().join("broken");
    fs::write(&flag, "").unwrap();
    let cmd = format!(
        r#"{{"command": "test -e '{}' && exit 1; cp {{test_src}} {{hyp_out}}"}}"#,
        flag.display()
    );
    let path = common::toy_config(dir.path(), 200, "[20, 60]", &cmd, "");
    let cfg = ExperimentConfig::load(&path).unwrap();
    let first = run_sweep(&cfg, RunOptions::default()).unwrap();
    assert!(first.iter().all(|r| !r.is_completed()));
    fs::remove_file(&flag).unwrap();
    let second = run_sweep(&cfg, RunOptions { resume: true, workers: Some(3) }).unwrap();
    assert!(second.iter().all(|r| r.is_completed()));
    let rows = read_results(&Layout::new(&cfg.output_dir).results()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.status == RunStatus::Completed));
}

#[test]
fn two_directions_two_testsets_and_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    common::write_toy_corpus(dir.path(), 300, 40, 6);
    fs::copy(dir.path().join("valid.hi"), dir.path().join("dev2.hi")).unwrap();
    fs::copy(dir.path().join("valid.en"), dir.path().join("dev2.en")).unwrap();
    let json = r#"{
        "schema": 1,
        "corpus": {
            "train": {"hi": "train.hi", "en": "train.en"},
            "valid": {"hi": "valid.hi", "en": "valid.en"},
            "test": {"toy": {"hi": "test.hi", "en": "test.en"}, "extra": {"hi": "dev2.hi", "en": "dev2.en"}}
        },
        "directions": ["hi-en", "en-hi"],
        "sample_by": "en",
        "sizes": [100, 250],
        "nmo_set": [15, 40],
        "repetitions": 2,
        "seed": 42,
        "workers": 4,
        "iterations": 100,
        "backend": {"builtin": "echo-reference"},
        "output_dir": "sweep"
    }"#;
    let path = dir.path().join("exp.json");
    fs::write(&path, json).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.plan().len(), 2 * 2 * 2 * 4);
    let records = run_sweep(&cfg, RunOptions::default()).unwrap();
    // sizes x nmo^2 x reps x directions x test sets
    assert_eq!(records.len(), 2 * 4 * 2 * 2 * 2);
    assert!(records.iter().all(|r| r.chrf == Some(100.0)));

    let layout = Layout::new(&cfg.output_dir);
    // Repetitions draw different samples.
    let s0 = fs::read_to_string(layout.sample(100, 0, "hi")).unwrap();
    let s1 = fs::read_to_string(layout.sample(100, 1, "hi")).unwrap();
    assert_ne!(s0, s1);
    // Per-bin quotas floor to the granularity, so a sample may fall short of the target.
    let n = s0.lines().count();
    assert!(n > 0 && n <= 100 && n.is_multiple_of(10), "{n}");

    // Shared tables equal a direct learn on the sample.
    for lang in ["hi", "en"] {
        let sample = fs::read_to_string(layout.sample(250, 1, lang)).unwrap();
        let direct = learn_bpe(&WordCounts::from_sentences(sample.lines()), 15).unwrap();
        let stored = MergeTable::from_text(&fs::read_to_string(layout.table(lang, 250, 1, 15)).unwrap()).unwrap();
        assert_eq!(stored, direct);
    }
    // Both directions point at the same table for a language.
    let he = records.iter().find(|r| r.direction == Direction::new("hi", "en")).unwrap();
    let eh = records
        .iter()
        .find(|r| r.direction == Direction::new("en", "hi") && r.size == he.size && r.rep == he.rep && r.config.tgt_nmo == he.config.src_nmo)
        .unwrap();
    assert_eq!(he.artifacts.src_table, eh.artifacts.tgt_table);

    let manifest: SweepManifest = serde_json::from_str(&fs::read_to_string(layout.manifest()).unwrap()).unwrap();
    assert_eq!(manifest.assumptions.len(), ASSUMPTIONS.len());
    assert_eq!(manifest.backend, "echo-reference");

    let loaded = load_records(&cfg.output_dir).unwrap();
    assert_eq!(loaded.len(), records.len());
    let rows = read_results(&layout.results()).unwrap();
    assert_eq!(rows.len(), records.len());
    let out = dir.path().join("report");
    let bundle = emit_report(&rows, &out).unwrap();
    // Per-rep reports plus mean reports for every cell.
    assert_eq!(bundle.tier_reports.len(), 2 * 2 * 2 * 2 + 2 * 2 * 2);
    assert!(bundle.skipped.is_empty());
    let summary = fs::read_to_string(&bundle.summary).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.ends_with("\t2\t100.00")));
}

#[test]
fn resume_refuses_changed_seed() {
    let (dir, cfg) = setup("[20, 60]", r#"{"builtin": "echo-reference"}"#, "");
    run_sweep(&cfg, RunOptions::default()).unwrap();
    let changed = common::toy_config(dir.path(), 200, "[20, 60]", r#"{"builtin": "echo-reference"}"#, r#", "seed": 9"#);
    let cfg2 = ExperimentConfig::load(&changed).unwrap();
    match run_sweep(&cfg2, RunOptions { resume: true, workers: None }) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "seed"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn record_artifacts_exist() {
    let (_dir, cfg) = setup("[20, 60]", r#"{"builtin": "identity-copy"}"#, "");
    let records = run_sweep(&cfg, RunOptions::default()).unwrap();
    for r in &records {
        let a = &r.artifacts;
        for p in [&a.src_table, &a.tgt_table, &a.train_src, &a.train_tgt, &a.valid_src, &a.valid_tgt, &a.test_src, &a.hypothesis] {
            assert!(p.exists(), "{}", p.display());
        }
        assert!(r.finalized);
        assert!(r.chrf.unwrap() < 100.0);
        assert!(r.started_at <= r.finished_at);
    }
    // Baseline is the best symmetric configuration and has p = 1.
    let best_sym = records
        .iter()
        .filter(|r| r.config.is_symmetric())
        .max_by(|a, b| a.chrf.unwrap().total_cmp(&b.chrf.unwrap()))
        .unwrap();
    assert_eq!(best_sym.p_vs_baseline, Some(1.0));
}
