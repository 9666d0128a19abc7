//! `loglaw`: batch experiment runner for the numerical laboratory.
//!
//! Exit codes: 0 on pass/complete, 2 on inconclusive, 1 on error (including
//! validation failures and unmet expectations).

mod catalog;
mod config;
mod experiments;
mod output;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use experiments::Outcome;
use output::OutputWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "loglaw",
    about = "Hitting-time scaling experiments for sequential dynamical systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a bundled config
    /// (`bundled:NAME`).
    Run {
        /// path to a JSON config, or `bundled:NAME`
        config: String,
        /// override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// override the output directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// worker threads (results do not depend on this)
        #[arg(long)]
        threads: Option<usize>,
        /// suppress the timestamped header line in outputs
        #[arg(long)]
        no_timestamp: bool,
    },
    /// List the bundled reproduction configs.
    List,
    /// Validate a config without running it.
    Validate {
        /// path to a JSON config, or `bundled:NAME`
        config: String,
    },
}

fn load_raw(spec: &str) -> Result<String> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        let c = catalog::find(name)
            .ok_or_else(|| anyhow!("no bundled config named {name:?} (see `loglaw list`)"))?;
        Ok(c.json.to_string())
    } else {
        std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))
    }
}

fn cmd_run(
    spec: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    no_timestamp: bool,
) -> Result<Outcome> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("initializing thread pool")?;
    }
    let raw = load_raw(spec)?;
    let mut cfg = config::parse_and_validate(&raw).map_err(|e| anyhow!("{e}"))?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    let out_dir = out.unwrap_or_else(|| {
        PathBuf::from(
            cfg.output()
                .map(str::to_string)
                .unwrap_or_else(|| format!("runs/{}", cfg.kind())),
        )
    });

    let mut writer = OutputWriter::new(&out_dir, !no_timestamp)?;
    let result = experiments::run(&cfg);
    match result {
        Ok(outcome) => {
            for (rel, body) in &outcome.csvs {
                writer.write_csv(rel, body)?;
            }
            let mut summary = outcome.summary.clone();
            if let Some(obj) = summary.as_object_mut() {
                obj.insert("config".into(), serde_json::from_str(&raw)?);
            }
            writer.write_raw("summary.json", &format!("{:#}\n", summary))?;
            let mut report = String::new();
            if let Some(ts) = writer.stamp() {
                report.push_str(ts);
            }
            report.push_str(&outcome.report);
            writer.write_raw("report.txt", &report)?;
            println!(
                "{}: {} -> {}",
                cfg.kind(),
                outcome.outcome.label(),
                out_dir.display()
            );
            if let Outcome::Failed(reason) | Outcome::Inconclusive(reason) = &outcome.outcome {
                println!("  {reason}");
            }
            Ok(outcome.outcome)
        }
        Err(e) => {
            writer.discard();
            Err(e)
        }
    }
}

fn cmd_list() {
    println!("bundled experiment configs ({}):", catalog::BUNDLED.len());
    for c in catalog::BUNDLED {
        let valid = config::parse_and_validate(c.json).is_ok();
        println!(
            "  bundled:{:<24} {} {}",
            c.name,
            if valid { " " } else { "!" },
            c.description
        );
    }
}

fn cmd_validate(spec: &str) -> Result<()> {
    let raw = load_raw(spec)?;
    match config::parse_and_validate(&raw) {
        Ok(cfg) => {
            println!("valid: {} experiment (seed {})", cfg.kind(), cfg.seed());
            Ok(())
        }
        Err(e) => Err(anyhow!("{e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            threads,
            no_timestamp,
        } => cmd_run(&config, seed, out, threads, no_timestamp),
        Command::List => {
            cmd_list();
            return ExitCode::SUCCESS;
        }
        Command::Validate { config } => match cmd_validate(&config) {
            Ok(()) => return ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
        },
    };
    match outcome {
        Ok(Outcome::Pass) | Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive(_)) => ExitCode::from(2),
        Ok(Outcome::Failed(_)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
