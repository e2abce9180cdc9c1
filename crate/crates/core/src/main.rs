use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use asym_bpe::bpe::{apply_bpe, learn_bpe, unsegment_line, MergeTable, WordCounts};
use asym_bpe::chrf::{self, ChrfConfig};
use asym_bpe::orchestrator::{self, ExperimentConfig, RunOptions};
use asym_bpe::sampler::{sample_to_files, LengthBin, ParallelCorpus};
use asym_bpe::sweep::{recommend, tier_report, Direction};

#[derive(Parser)]
#[command(name = "asym-bpe", version, about = "Asymmetric BPE sweeps for low-resource MT")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a merge table from a whitespace-tokenized corpus.
    LearnBpe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_nmo)]
        nmo: u32,
        #[arg(long)]
        output: PathBuf,
    },
    /// Segment text with a merge table (stdin/stdout by default).
    ApplyBpe {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Remove "@@ " continuation markers (stdin to stdout).
    Unbpe,
    /// Draw a length-stratified sample of a parallel corpus.
    Sample {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, value_parser = parse_count)]
        size: u64,
        #[arg(long)]
        seed: u64,
        /// Inclusive upper bounds; a final open bin is added.
        #[arg(long, value_delimiter = ',', default_value = "10,15,20,25,30,35,40")]
        bins: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        granularity: u64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Corpus-level CHRF++.
    Chrf {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 6)]
        char_order: usize,
        #[arg(long, default_value_t = 2)]
        word_order: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Paired significance test between two systems.
    Significance {
        #[arg(long)]
        hyp_a: PathBuf,
        #[arg(long)]
        hyp_b: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tier reports from a results file or a sweep directory.
    Report {
        #[arg(long, conflicts_with = "run_dir", required_unless_present = "run_dir")]
        results: Option<PathBuf>,
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long)]
        direction: Option<Direction>,
        #[arg(long, value_parser = parse_count)]
        size: Option<u64>,
        #[arg(long)]
        testset: Option<String>,
        #[arg(long)]
        rep: Option<u32>,
        /// Print TSV instead of the aligned table.
        #[arg(long)]
        tsv: bool,
    },
    /// Suggested NMO ranges for a training-set size.
    Recommend {
        #[arg(long, value_parser = parse_count)]
        size: u64,
    },
    /// Run (or resume) a full configuration sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn parse_nmo(s: &str) -> std::result::Result<u32, String> {
    asym_bpe::sweep::parse_nmo(s).map_err(|e| e.to_string())
}

/// Accepts plain integers and K/M suffixes ("50K", "1.5M").
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let (num, mult) = match t.chars().last() {
        Some('k' | 'K') => (&t[..t.len() - 1], 1e3),
        Some('m' | 'M') => (&t[..t.len() - 1], 1e6),
        _ => return t.parse().map_err(|_| format!("not a count: {s:?}")),
    };
    let v: f64 = num.parse().map_err(|_| format!("not a count: {s:?}"))?;
    let n = v * mult;
    if !(n >= 0.0 && n.fract() == 0.0) {
        return Err(format!("not a whole count: {s:?}"));
    }
    Ok(n as u64)
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::LearnBpe { input, nmo, output } => {
            let mut counts = WordCounts::new();
            for line in open_input(Some(&input))?.lines() {
                counts.add_sentence(&line?);
            }
            let table = learn_bpe(&counts, nmo as usize)?;
            if table.nmo() < nmo as usize {
                log::warn!("stopped early: {} of {nmo} merges", table.nmo());
            }
            let mut w = open_output(Some(&output))?;
            table.write_to(&mut w)?;
            w.flush()?;
        }
        Cmd::ApplyBpe { table, input, output } => {
            let table = MergeTable::read_from(BufReader::new(
                File::open(&table).with_context(|| format!("opening {}", table.display()))?,
            ))?;
            let mut w = open_output(output.as_deref())?;
            for line in open_input(input.as_deref())?.lines() {
                writeln!(w, "{}", apply_bpe(&table, &line?))?;
            }
            w.flush()?;
        }
        Cmd::Unbpe => {
            let mut w = open_output(None)?;
            for (i, line) in io::stdin().lock().lines().enumerate() {
                let plain = unsegment_line(&line?).with_context(|| format!("line {}", i + 1))?;
                writeln!(w, "{plain}")?;
            }
            w.flush()?;
        }
        Cmd::Sample { src, tgt, size, seed, bins, granularity, out_prefix } => {
            let corpus = ParallelCorpus::read(&src, &tgt)?;
            let bins = LengthBin::from_upper_bounds(&bins)?;
            let (manifest, out) = sample_to_files(&corpus, &bins, size, seed, granularity, &out_prefix)?;
            println!("bin\tavailable\tpercent\tquota");
            for (i, bin) in manifest.bin_plan.bins.iter().enumerate() {
                println!(
                    "{bin}\t{}\t{:.2}\t{}",
                    manifest.bin_plan.counts[i],
                    manifest.bin_plan.percentages()[i],
                    manifest.sample_plan.per_bin_quota[i]
                );
            }
            println!("total\t{}\t\t{}", manifest.source_lines, manifest.sample_lines);
            eprintln!("wrote {}, {}, {}", out.src.display(), out.tgt.display(), out.manifest.display());
        }
        Cmd::Chrf { hyp, reference, char_order, word_order, beta } => {
            let cfg = ChrfConfig { char_order, word_order, beta };
            let score = chrf::corpus_chrf_lines(&read_lines(&hyp)?, &read_lines(&reference)?, &cfg)?;
            println!("chrF{} (beta={beta}) = {}", "+".repeat(word_order), score.display());
        }
        Cmd::Significance { hyp_a, hyp_b, reference, iterations, seed } => {
            let r = chrf::paired_significance(
                &read_lines(&hyp_a)?,
                &read_lines(&hyp_b)?,
                &read_lines(&reference)?,
                iterations,
                seed,
                &ChrfConfig::default(),
            )?;
            println!("# method: {} (CHRF++, {} iterations, seed {})", r.method, r.iterations, r.seed);
            println!("system_a\t{:.2}", r.score_a);
            println!("system_b\t{:.2}", r.score_b);
            println!("p_value\t{:.6}", r.p_value);
            println!("better\t{}", match r.better_system {
                chrf::BetterSystem::A => "A",
                chrf::BetterSystem::B => "B",
                chrf::BetterSystem::Tie => "tie",
            });
        }
        Cmd::Report { results, run_dir, direction, size, testset, rep, tsv } => {
            if let Some(dir) = run_dir {
                let rows = orchestrator::read_results(&orchestrator::Layout::new(&dir).results())?;
                let bundle = orchestrator::emit_report(&rows, &dir.join("report"))?;
                for c in &bundle.tier_reports {
                    println!("== {}", c.stem());
                    print!("{}", if tsv { c.report.to_tsv() } else { c.report.to_text() });
                }
                for (stem, why) in &bundle.skipped {
                    println!("== {stem}: no tier report ({why})");
                }
                eprintln!("report written to {}", dir.join("report").display());
                return Ok(());
            }
            let rows = orchestrator::read_results(results.as_deref().expect("required by clap"))?;
            let mut printed = 0;
            for (d, s, t) in orchestrator::cells(&rows) {
                if direction.as_ref().is_some_and(|x| x != &d)
                    || size.is_some_and(|x| x != s)
                    || testset.as_ref().is_some_and(|x| x != &t)
                {
                    continue;
                }
                let mut reps: Vec<u32> = rows
                    .iter()
                    .filter(|r| r.direction == d && r.size == s && r.testset == t)
                    .map(|r| r.rep)
                    .collect();
                reps.sort_unstable();
                reps.dedup();
                for r in reps.into_iter().filter(|r| rep.is_none_or(|x| x == *r)) {
                    let cell = orchestrator::cell_results(&rows, &d, s, &t, r);
                    println!("== {d} size {s} testset {t} rep {r}");
                    match tier_report(&cell) {
                        Ok(report) => print!("{}", if tsv { report.to_tsv() } else { report.to_text() }),
                        Err(e) => println!("no tier report: {e}"),
                    }
                    printed += 1;
                }
            }
            if printed == 0 {
                bail!("no results match the given filters");
            }
        }
        Cmd::Recommend { size } => {
            let r = recommend(size);
            println!("band\t{}", r.resource_band);
            println!("src_nmo\t{}", r.src_range);
            println!("tgt_nmo\t{}", r.tgt_range);
            println!("rationale\t{}", r.rationale);
        }
        Cmd::Sweep { config, resume, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            log::info!(
                "{} planned systems ({} test sets each), output {}",
                cfg.plan().len(),
                cfg.corpus.test.len(),
                cfg.output_dir.display()
            );
            let records = orchestrator::run_sweep(&cfg, RunOptions { resume, workers })?;
            let failed = records.iter().filter(|r| !r.is_completed()).count();
            println!(
                "{} records ({} completed, {failed} failed); results in {}",
                records.len(),
                records.len() - failed,
                orchestrator::Layout::new(&cfg.output_dir).results().display()
            );
        }
    }
    Ok(())
}
