mod commands;
mod config;
mod error;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use dirichlet_lab::report::emit_plotdata;

use crate::config::{Cli, Format, RunConfig, Settings};
use crate::error::CliError;

fn execute(cli: Cli) -> Result<bool, CliError> {
    let mut settings = cli.settings;
    if let Some(path) = &cli.config {
        settings = settings.merged_with(&Settings::load(path)?);
    }
    settings.seed.get_or_insert(commands::DEFAULT_SEED);
    if let Some(t) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let format = settings.format.unwrap_or_else(|| commands::default_format(cli.command));
    let outcome = commands::run(cli.command, &settings)?;
    let config = RunConfig { command: cli.command, settings: settings.clone() };
    let config_json = serde_json::to_value(&config).map_err(|e| CliError::Compute(e.to_string()))?;

    let body = match (format, &outcome.csv) {
        (Format::Csv, Some(csv)) => format!("# config: {config_json}\n{csv}"),
        (Format::Csv, None) => {
            return Err(CliError::Config("this command has no CSV form; use --format json".into()));
        }
        (Format::Json, _) => {
            let doc = serde_json::json!({ "config": config_json, "report": outcome.report });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Compute(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match &settings.out {
        Some(path) => std::fs::write(path, body)?,
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    if let Some(path) = &settings.plotdata {
        let mut w = BufWriter::new(File::create(path)?);
        emit_plotdata(&outcome.plot, &mut w)?;
        w.flush()?;
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("dlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
