//! `ultrajet` command-line driver.
//!
//! Exit status: 0 when every required verdict holds, 1 on a failed verdict or
//! a runtime error, 2 on a configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::ExperimentConfig;
use run::{Command, Runner};

#[derive(Debug, Parser)]
#[command(name = "ultrajet", version, about = "Weight calculus and Whitney extension of ultradifferentiable jets")]
struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment config; the built-in sin fixture when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for sampled point sets, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat report warnings as failures.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let loaded = match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::parse(&format!("schema_version = {}", config::SCHEMA_VERSION))
            .expect("defaults are valid")),
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let out = run::output_dir(cli.out.as_deref(), "out", cli.config.as_deref());
            let r = run::config_failure(cli.command, e.to_string());
            if std::fs::create_dir_all(&out).is_ok() {
                let _ = report::write_json(&out.join("report.json"), &r);
            }
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = run::output_dir(cli.out.as_deref(), &cfg.output.dir, cli.config.as_deref());
    match Runner::new(cli.command, cfg, out.clone(), cli.strict).run(cli.command) {
        Ok(r) => {
            for e in &r.errors {
                eprintln!("error [{}] {}: {}", e.stage, e.kind, e.message);
            }
            for v in r.verdicts.iter().filter(|v| v.required && !v.holds) {
                eprintln!("failed: {}/{}", v.stage, v.name);
            }
            println!(
                "{} {} -> {}",
                cli.command.name(),
                if r.passed { "PASS" } else { "FAIL" },
                out.join("report.json").display()
            );
            if r.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", out.display());
            ExitCode::from(1)
        }
    }
}
