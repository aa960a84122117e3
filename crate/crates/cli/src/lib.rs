//! Command-line pipeline: dataset generation, training, evaluation, reporting.

pub mod args;
pub mod commands;
pub mod manifest;

use thiserror::Error;

pub use args::Cli;
use args::Command;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cyclegzsl::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("refusing to {0}")]
    Refused(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Executes one subcommand; human-readable summaries go to standard output.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenSynthetic(a) => print!("{}", commands::cmd_gen_synthetic(&a)?),
        Command::Train(a) => {
            let dir = commands::cmd_train(&a)?;
            println!("run written to {}", dir.display());
        }
        Command::Eval(a) => {
            commands::cmd_eval(&a)?;
            print!("{}", std::fs::read_to_string(a.run.join(commands::RunFiles::REPORT_TXT)).unwrap_or_default());
        }
        Command::Report(a) => print!("{}", commands::cmd_report(&a)?),
        Command::Inspect(a) => print!("{}", commands::cmd_inspect(&a)?),
    }
    Ok(())
}
