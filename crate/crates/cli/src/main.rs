use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use elate_core::engine::{
    self, make_backend, write_csv, EngineConfig, Prepared, RunReport, SavedRun, REPORT_FILE,
};

#[derive(Parser)]
#[command(
    name = "elate",
    version,
    about = "Evolutionary feature engineering for time-series forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolutionary search and write the run directory.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `max_prompts` from the config.
        #[arg(long)]
        max_prompts: Option<usize>,
    },
    /// Append the best features of a run to a CSV file.
    Transform {
        /// Run directory written by `fit` or `zero-shot`.
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ask for k features in a single prompt, without evolution.
    ZeroShot {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarize a run directory or report file.
    Report {
        /// Run directory or `report.json` path.
        #[arg(long)]
        db: PathBuf,
        /// Print the raw JSON report.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Fit {
            config,
            output,
            seed,
            max_prompts,
        } => {
            let mut cfg = load_config(&config)?;
            if output.is_some() {
                cfg.output_dir = output;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if max_prompts.is_some() {
                cfg.max_prompts = max_prompts;
            }
            let outcome = engine::fit(&cfg).context("fit failed")?;
            print!("{}", summarize(&outcome.report));
            if let Some(dir) = &cfg.output_dir {
                println!("run written to {}", dir.display());
            }
        }
        Command::Transform { db, data, out } => {
            let saved =
                SavedRun::load(&db).with_context(|| format!("cannot load run {}", db.display()))?;
            let text = std::fs::read_to_string(&data)
                .with_context(|| format!("cannot read {}", data.display()))?;
            let frame = saved.read_frame(&text)?;
            let frame = engine::transform(&frame, &saved.best_features)?;
            let csv = write_csv(&frame, &saved.manifest.timestamp_column)?;
            match out {
                Some(p) => std::fs::write(&p, csv)
                    .with_context(|| format!("cannot write {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::ZeroShot { config, k, output } => {
            let mut cfg = load_config(&config)?;
            if output.is_some() {
                cfg.output_dir = output;
            }
            let mut backend = make_backend(&cfg)?;
            let prepared = Prepared::load(&cfg)?;
            let outcome = engine::zero_shot(&cfg, &prepared, &mut backend, k)?;
            let c = outcome.counts;
            println!(
                "proposed {} accepted {} parse_failed {} validation_failed {}",
                c.proposed, c.accepted, c.parse_failed, c.validation_failed
            );
            for f in &outcome.features {
                println!("\n{}", f.source());
            }
        }
        Command::Report { db, json } => {
            let file = if db.is_dir() {
                db.join(REPORT_FILE)
            } else {
                db
            };
            let report = RunReport::load(&file)
                .with_context(|| format!("cannot load {}", file.display()))?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", summarize(&report));
            }
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<EngineConfig> {
    EngineConfig::load(path).with_context(|| format!("bad config {}", path.display()))
}

fn summarize(r: &RunReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "rows {} (train < {}, validation < {}, test < {})\n",
        r.dataset.rows, r.dataset.train_end, r.dataset.validation_end, r.dataset.test_end
    ));
    s.push_str(&format!(
        "base validation rmse {:.6}\n",
        r.base_validation_rmse
    ));
    for g in &r.generations {
        s.push_str(&format!(
            "generation {:>3}: residual {:.6}, best {} features, accepted {}/{}\n",
            g.generation,
            g.residual,
            g.best_features.len(),
            g.counts.accepted,
            g.counts.proposed
        ));
    }
    let t = &r.totals;
    s.push_str(&format!(
        "candidates: proposed {}, parse_failed {}, validation_failed {}, dead {}, accepted {}\n",
        t.proposed, t.parse_failed, t.validation_failed, t.dead_score, t.accepted
    ));
    s.push_str(&format!(
        "test rmse {:.6} (base {:.6}, {:+.1}%), mae {:.6} (base {:.6})\n",
        r.test.rmse,
        r.test.base_rmse,
        -100.0 * r.test_improvement(),
        r.test.mae,
        r.test.base_mae
    ));
    s.push_str(&format!(
        "stop: {:?}, prompts {}, llm errors {}\n",
        r.stop_reason, r.prompts, r.llm_errors
    ));
    s.push_str(&format!("best features: {}\n", r.best_features.join(", ")));
    s
}
