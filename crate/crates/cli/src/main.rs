mod args;
mod commands;
mod config;
mod provenance;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use config::RunFile;

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

/// Runs one parsed command and records its provenance.
fn dispatch(cli: &Cli, argv: &[String], command_path: &[String], run_file: Option<&RunFile>) -> Result<()> {
    let mut touched = commands::execute(&cli.command).with_context(|| format!("`{}` failed", command_path.join(" ")))?;
    if let Some(rf) = run_file {
        touched.inputs.push(rf.path.clone());
    }
    if let Some(path) = provenance::append(command_path, &argv[1..], &touched)? {
        log::debug!("provenance appended to {}", path.display());
    }
    Ok(())
}

fn run_steps(run_file: &RunFile) -> Result<()> {
    let steps = run_file.steps()?;
    for (i, (path, overrides)) in steps.iter().enumerate() {
        let mut argv = vec!["genaug".to_string()];
        argv.extend(path.iter().cloned());
        argv.extend(run_file.flags(path, overrides.as_ref())?);
        log::info!("step {}/{}: {}", i + 1, steps.len(), path.join(" "));
        let cli = Cli::try_parse_from(&argv).with_context(|| format!("step {} ({})", i + 1, path.join(" ")))?;
        dispatch(&cli, &argv, path, Some(run_file))?;
    }
    Ok(())
}

fn real_main() -> Result<ExitCode> {
    let (argv, run_file) = config::expand(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    init_threads(cli.threads)?;
    match (&cli.command, run_file) {
        (Command::Run, Some(rf)) => run_steps(&rf)?,
        (_, rf) => {
            let (_, path) = config::command_path(&argv).context("could not locate the command in the arguments")?;
            dispatch(&cli, &argv, &path, rf.as_ref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            // Core errors already embed their source's text.
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.ends_with(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
