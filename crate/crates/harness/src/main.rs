use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use imbmix::data::ImbalanceKind;
use imbmix::metrics::{margin_report, read_logits_csv};
use imbmix_harness::analysis::{compare, correlate, load_records, load_summary};
use imbmix_harness::{run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "imbmix",
    version,
    about = "Mixup-family experiments on imbalanced data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Imbalance {
    Lt,
    Step,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment file and write records + summary.
    Run {
        config: PathBuf,
        /// Comma-separated seeds, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, value_enum)]
        imbalance: Option<Imbalance>,
    },
    /// Side-by-side table of several summary.json files (deltas vs the first).
    Compare {
        #[arg(required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
        /// Also write the comparison CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman correlation between margin gap and balanced accuracy.
    Correlate {
        /// Glob over record files, e.g. `runs/*/records/*.json`.
        records: String,
        /// Write the (gap, accuracy) scatter CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Margin report for exported logits.
    Margins {
        logits: PathBuf,
        /// One integer label per line.
        labels: PathBuf,
        /// Training class counts, comma-separated.
        #[arg(value_delimiter = ',')]
        counts: Vec<usize>,
        /// Skip a header line in the logits file.
        #[arg(long)]
        header: bool,
    },
}

fn read_labels(path: &Path) -> anyhow::Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse()
                .with_context(|| format!("{}:{}: bad label `{l}`", path.display(), i + 1))
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    match run() {
        // a closed pipe (`| head`) is not an error for a CLI
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            Ok(())
        }
        other => other,
    }
}

fn run() -> anyhow::Result<()> {
    let mut stdout = io::stdout().lock();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            seeds,
            out,
            method,
            rho,
            imbalance,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(m) = method {
                cfg.method = m;
            }
            if let Some(r) = rho {
                cfg.dataset.imbalance.rho = r;
            }
            if let Some(kind) = imbalance {
                cfg.dataset.imbalance.kind = match kind {
                    Imbalance::Lt => ImbalanceKind::LongTailed,
                    Imbalance::Step => ImbalanceKind::Step,
                };
            }
            cfg.validate()?;
            let dir = out
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.method));
            let summary = run_experiment(&cfg, &dir)?;
            let gap = summary
                .margin_gap
                .map_or("n/a".to_string(), |g| format!("{:.4} ± {:.4}", g.mean, g.std));
            writeln!(
                stdout,
                "{}: balanced accuracy {:.2} ± {:.2}, margin gap {gap}{}",
                summary.method,
                100.0 * summary.balanced_accuracy.mean,
                100.0 * summary.balanced_accuracy.std,
                if summary.single_run { " (single run)" } else { "" },
            )?;
            writeln!(stdout, "wrote {}", dir.display())?;
        }
        Command::Compare { summaries, out } => {
            let tables = summaries
                .iter()
                .map(|p| load_summary(p))
                .collect::<Result<Vec<_>, _>>()?;
            let cmp = compare(&tables)?;
            let csv = cmp.to_csv();
            write!(stdout, "{csv}")?;
            if let Some(path) = out {
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Correlate { records, out } => {
            let recs = load_records(&records)?;
            if recs.is_empty() {
                bail!("no records match `{records}`");
            }
            let c = correlate(&recs)?;
            writeln!(stdout, "spearman rho = {:.4} over {} runs", c.rho, c.points.len())?;
            if let Some(path) = out {
                fs::write(&path, c.scatter_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Margins {
            logits,
            labels,
            counts,
            header,
        } => {
            let z = if header {
                let text = fs::read_to_string(&logits)?;
                let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
                imbmix::metrics::parse_logits_csv::<f64>(&body)?
            } else {
                read_logits_csv::<f64>(&logits)?
            };
            let y = read_labels(&labels)?;
            let report = margin_report(&z, &y, &counts)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}
