//! Command-line experiment runner.
//!
//! Exit codes: 0 success, 2 configuration error, 3 task failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use adlab::config::{ExperimentConfig, OutputFormat};
use adlab::runner::{build_model, run};
use adlab::Error;

#[derive(Parser)]
#[command(name = "adlab", version, about = "Numerical laboratory for quantum adiabatic evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a configuration file.
    Run {
        /// Path to the JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format (overrides the configuration).
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Check a configuration file without running anything.
    Validate {
        /// Path to the JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

/// Configuration problems exit with 2, runtime task failures with 3.
fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::ConfigInvalid { .. } | Error::ParseError { .. } | Error::Json(_) => 2,
        Error::TaskFailed { source, .. } => exit_code_for(source),
        _ => 3,
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let config = ExperimentConfig::from_path(path)?;
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, format } => load_config(&config).and_then(|c| {
            run(&c, out.as_deref(), format.map(Into::into)).map(|manifest| {
                let dir = manifest
                    .config
                    .output
                    .directory
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "adlab_out".to_string());
                println!("wrote {} file(s) to {}", manifest.outputs.len().max(manifest.sweep_directories.len()), dir);
            })
        }),
        Command::Validate { config } => load_config(&config).and_then(|c| {
            // instantiating the model catches file-backed problems
            // (missing samples, non-Hermitian input, level out of range)
            build_model(&c).map(|model| {
                println!("configuration valid: {}-level model, {} task(s)", model.dimension(), c.tasks.len());
            })
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // exit 2 for configuration problems, 3 for task failures
            let code = match &e {
                Error::Io(_) => 2, // unreadable config path
                other => exit_code_for(other),
            };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
