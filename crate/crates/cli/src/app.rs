//! Argument parsing and dispatch, shared by the binary and in-process tests.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{self, Context, Outcome, ReportFormat};
use crate::{CliError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "multinorm", version, about = "Contraction analysis of switched systems under mode-dependent norms")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for sampled estimates and random initial states.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Integration step in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Matrix measure of each mode under its norm.
    Measure,
    /// Transaction coefficients between every pair of mode norms.
    Beta,
    /// Averaged contraction certificate for a switching signal.
    Certify,
    /// Trajectory as CSV; with `y0`, also the pair-divergence rate.
    Simulate,
    /// Period threshold and certificate of a blinking Chua network.
    Sync,
    /// Recompute the worked-example constants and compare with quoted values.
    Repro {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Everything a run writes to the terminal, plus its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

fn load(cli: &Cli) -> Result<(RunConfig, Context), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("$", "--config <path> is required"))?;
    let cfg = RunConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, Context { base, seed: cli.seed, dt: cli.dt }))
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(dt) = cli.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::config("--dt", "must be positive"));
        }
    }
    if let Command::Repro { format } = cli.command {
        return commands::repro_cmd(match format {
            Format::Json => ReportFormat::Json,
            Format::Text => ReportFormat::Text,
        });
    }
    let (cfg, ctx) = load(cli)?;
    match cli.command {
        Command::Measure => commands::measure(&cfg),
        Command::Beta => commands::beta_cmd(&cfg, &ctx),
        Command::Certify => commands::certify(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg, &ctx),
        Command::Sync => commands::sync_cmd(&cfg, &ctx),
        Command::Repro { .. } => unreachable!("handled above"),
    }
}

/// With `--out` the main output goes to the file and a CSV's JSON summary to
/// stdout; otherwise the main output goes to stdout and the summary to stderr.
fn emit(cli: &Cli, out: Outcome) -> Result<Output, CliError> {
    let summary = out.summary.unwrap_or_default();
    let code = out.code;
    Ok(match &cli.out {
        Some(path) => {
            std::fs::write(path, &out.body).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Output { code, stdout: summary, stderr: String::new() }
        }
        None => Output { code, stdout: out.body, stderr: summary },
    })
}

/// Runs one invocation. Exit codes: 0 success or certified, 1 error,
/// 2 valid input that does not certify.
pub fn execute<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { code: 1, stdout: String::new(), stderr: text }
            } else {
                Output { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match dispatch(&cli).and_then(|out| emit(&cli, out)) {
        Ok(out) => out,
        Err(e) => Output { code: 1, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}
