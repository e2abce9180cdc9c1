//! A complete sweep on a toy corpus with a custom in-process backend, then a
//! report over the results.

use std::fs;

use asym_bpe::orchestrator::{
    emit_report, read_results, run_sweep_with_backend, Backend, BackendJob, BackendResult, ExperimentConfig, Layout,
    RunOptions,
};

/// Copies the reference but drops the first word of more lines the larger the
/// target NMO is relative to the source NMO, so configurations differ.
struct Degrading;

impl Backend for Degrading {
    fn name(&self) -> String {
        "degrading-echo".into()
    }

    fn run(&self, job: &BackendJob) -> BackendResult {
        let io = |e: std::io::Error| asym_bpe::orchestrator::BackendFailure { exit_status: None, reason: e.to_string() };
        let text = fs::read_to_string(&job.test_tgt).map_err(io)?;
        let (s, t) = (f64::from(job.config.src_nmo), f64::from(job.config.tgt_nmo));
        let every = ((s + t) / t).round() as usize;
        let mut out = String::new();
        for (i, line) in text.lines().enumerate() {
            let keep = if i % every == 0 { line.split_once(' ').map_or(line, |p| p.1) } else { line };
            out.push_str(keep);
            out.push('\n');
        }
        fs::write(&job.hyp_out, out).map_err(io)?;
        Ok(0)
    }
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join(format!("asym-bpe-mock-sweep-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let words = ["river", "stone", "bright", "quiet", "falls", "over", "the", "small", "green", "hill"];
    for (split, n) in [("train", 600), ("valid", 40), ("test", 80)] {
        let mut src = String::new();
        let mut tgt = String::new();
        for i in 0..n {
            let len = 2 + (i * 7) % 13;
            let sent: Vec<&str> = (0..len).map(|k| words[(i * 3 + k * k) % words.len()]).collect();
            src.push_str(&sent.iter().map(|w| w.chars().rev().collect::<String>()).collect::<Vec<_>>().join(" "));
            src.push('\n');
            tgt.push_str(&sent.join(" "));
            tgt.push('\n');
        }
        fs::write(dir.join(format!("{split}.xx")), src)?;
        fs::write(dir.join(format!("{split}.en")), tgt)?;
    }
    let config = r#"{
        "schema": 1,
        "corpus": {
            "train": {"xx": "train.xx", "en": "train.en"},
            "valid": {"xx": "valid.xx", "en": "valid.en"},
            "test": {"dev": {"xx": "test.xx", "en": "test.en"}}
        },
        "directions": ["xx-en"],
        "sizes": [400],
        "nmo_set": [20, 80, 200],
        "seed": 3,
        "iterations": 300,
        "backend": {"builtin": "echo-reference"},
        "output_dir": "run"
    }"#;
    let cfg = ExperimentConfig::from_json(config, &dir)?;
    let records = run_sweep_with_backend(&cfg, &Degrading, RunOptions::default())?;
    println!("{} systems scored", records.len());
    for r in &records {
        println!("  {:10} chrF++ {:6.2}  p {:?}", r.config.label(), r.chrf.unwrap_or(f64::NAN), r.p_vs_baseline);
    }

    let rows = read_results(&Layout::new(&cfg.output_dir).results())?;
    let bundle = emit_report(&rows, &dir.join("report"))?;
    for cell in &bundle.tier_reports {
        println!("\n== {}", cell.stem());
        print!("{}", cell.report.to_text());
    }
    println!("\noutputs in {}", dir.display());
    Ok(())
}
