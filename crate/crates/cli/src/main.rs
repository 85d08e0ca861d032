//! `hyperclass` command-line entry point.

mod args;
mod commands;
mod config;

use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use commands::{Outcome, UsageError};
use config::resolve;

fn emit(outcome: Outcome) -> Result<()> {
    let text = serde_json::to_string_pretty(&outcome.report)?;
    match outcome.path {
        Some(path) => {
            fs::write(&path, text + "\n").with_context(|| format!("writing report {}", path.display()))?;
            eprintln!("report written to {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::GenSynth(a) => {
            let a = resolve(&a, a.config.as_deref(), "gen-synth")?;
            emit(commands::gen_synth(&a)?)?;
        }
        Command::MetaTrain(a) => {
            let a = resolve(&a, a.config.as_deref(), "meta-train")?;
            emit(commands::meta_train_cmd(&a)?)?;
        }
        Command::EvalIrrf(a) => {
            let a = resolve(&a, a.config.as_deref(), "eval-irrf")?;
            emit(commands::eval_irrf_cmd(&a)?)?;
        }
        Command::EvalFsocc(a) => {
            let a = resolve(&a, a.config.as_deref(), "eval-fsocc")?;
            emit(commands::eval_fsocc_cmd(&a)?)?;
        }
        Command::EvalFsor(a) => {
            let a = resolve(&a, a.config.as_deref(), "eval-fsor")?;
            emit(commands::eval_fsor_cmd(&a)?)?;
        }
        Command::TheoryCheck(a) => {
            let a = resolve(&a, a.config.as_deref(), "theory-check")?;
            let (outcome, pass) = commands::theory_check_cmd(&a)?;
            if outcome.path.is_some() {
                emit(outcome)?;
            }
            return Ok(pass);
        }
        Command::Serve(a) => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            let a = resolve(&a, a.config.as_deref(), "serve")?;
            commands::serve_cmd(&a)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("\nFor more information, try '--help'.");
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
