//! `sgkit`: one entry point for validation, statistics, annotation,
//! benchmark selection, metrics, splitting, encoding and audits.
//!
//! Exit codes: 0 success, 1 domain errors present, 2 usage or I/O failure.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::run::Run;

#[derive(Parser, Debug)]
#[command(name = "sgkit", version, about = "Scene-graph dataset toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Apply dataset construction rules (attributes required, score threshold).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Structural checks only (default).
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

impl Global {
    fn mode_flag(&self) -> Option<String> {
        if self.strict {
            Some("strict".into())
        } else if self.lenient {
            Some("lenient".into())
        } else {
            None
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every record of a corpus.
    Validate(commands::validate::ValidateArgs),
    /// Corpus statistics table and JSON report.
    Stats(commands::stats::StatsArgs),
    /// Annotate images with scene graphs through a chat endpoint.
    Annotate(commands::annotate::AnnotateArgs),
    /// Select complex scenes for the benchmark manifest.
    Bench(commands::bench::BenchArgs),
    /// IoU metrics between predicted and reference graphs, or the accuracy protocol.
    Metrics(commands::metrics::MetricsArgs),
    /// Seeded train/val/test split, or audit of imported lists.
    Split(commands::split::SplitArgs),
    /// Scene-graph embeddings for every record.
    Encode(commands::encode::EncodeArgs),
    /// Draw a manual-audit sample or summarize a filled tally sheet.
    Audit(commands::audit::AuditArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Stats(_) => "stats",
            Command::Annotate(_) => "annotate",
            Command::Bench(_) => "bench",
            Command::Metrics(_) => "metrics",
            Command::Split(_) => "split",
            Command::Encode(_) => "encode",
            Command::Audit(_) => "audit",
        }
    }
}

fn start(global: &Global, name: &'static str) -> anyhow::Result<Run> {
    let file = match &global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    for k in file.unknown_keys() {
        log::warn!("config: unknown key {k:?} ignored");
    }
    let out = global
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut run = Run::new(name, out.clone(), file);
    run.record("out", out.display().to_string());
    if let Some(p) = &global.config {
        run.record("config_file", p.display().to_string());
    }
    Ok(run)
}

fn dispatch(command: Command, global: &Global, run: &mut Run) -> anyhow::Result<u8> {
    let seed = run.setting("seed", global.seed, 0u64)?;
    let mode = commands::parse_mode(&run.setting("mode", global.mode_flag(), "lenient".to_string())?)?;
    match command {
        Command::Validate(a) => commands::validate::run(a, run, mode),
        Command::Stats(a) => commands::stats::run(a, run),
        Command::Annotate(a) => commands::annotate::run(a, run),
        Command::Bench(a) => commands::bench::run(a, run),
        Command::Metrics(a) => commands::metrics::run(a, run, seed),
        Command::Split(a) => commands::split::run(a, run, seed),
        Command::Encode(a) => commands::encode::run(a, run, seed),
        Command::Audit(a) => commands::audit::run(a, run, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let name = cli.command.name();
    let mut run = match start(&cli.global, name) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let code = match dispatch(cli.command, &cli.global, &mut run) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    if let Err(e) = run.write_manifest(code) {
        eprintln!("error: writing run manifest: {e:#}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
