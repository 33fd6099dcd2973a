//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 statistical
//! or numerical gate failure.

pub mod commands;
pub mod config;
pub mod presets;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Context, Outcome};
use config::{ManifestSection, RunFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GATE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io(_) => EXIT_USAGE,
            Self::Validation(_) => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmbin", version, about = "Markov-modulated binomial counting processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration (fig1..fig4, fig34, accept-*).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Allow writing into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Stationary law, fundamental and deviation matrices, identity residuals.
    Chain,
    /// One exact path per run: N, chain state and intensity at every event.
    Simulate,
    /// Monte-Carlo check of the centered and scaled process against its limit.
    Clt,
    /// Mean and variance curves of the limit laws.
    Curves,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Chain => "chain",
            Self::Simulate => "simulate",
            Self::Clt => "clt",
            Self::Curves => "curves",
        }
    }
}

fn load(cli: &Cli) -> Result<RunFile, CliError> {
    let mut file = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            RunFile::from_toml_str(&text).map_err(|e| match e {
                CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => return Err(CliError::Usage("one of --config or --preset is required".into())),
    };
    if let Some(seed) = cli.seed {
        file.seed = Some(seed);
    }
    file.seed = Some(file.seed());
    file.manifest = Some(ManifestSection {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        preset: cli.preset.clone(),
    });
    Ok(file)
}

fn prepare_out(cli: &Cli) -> Result<(), CliError> {
    let out = &cli.out;
    if out.exists() {
        if !out.is_dir() {
            return Err(CliError::Usage(format!("{} is not a directory", out.display())));
        }
        let non_empty = fs::read_dir(out)
            .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?
            .next()
            .is_some();
        if non_empty && !cli.force {
            return Err(CliError::Usage(format!(
                "{} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
    }
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let file = load(cli)?;
    // Validate everything the command needs before touching the disk.
    file.generator()?;
    match cli.command {
        Command::Chain => {}
        Command::Simulate | Command::Curves => {
            file.runs()?;
        }
        Command::Clt => {
            file.experiments()?;
        }
    }
    prepare_out(cli)?;
    fs::write(cli.out.join("manifest.toml"), file.to_toml_string())
        .map_err(|e| CliError::Io(format!("manifest.toml: {e}")))?;
    let ctx = Context {
        file: &file,
        out: &cli.out,
        svg: cli.svg,
    };
    match cli.command {
        Command::Chain => commands::chain(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Clt => commands::clt(&ctx),
        Command::Curves => commands::curves(&ctx),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return EXIT_USAGE;
    }
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::GateFailed) => EXIT_GATE,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
