//! `scenforge`: key frames to abstract scenarios to concrete scenarios to
//! searched safety violations.

mod commands;
mod config;
mod error;
mod manifest;

use clap::{Parser, Subcommand};
use commands::Session;
use config::RunConfig;
use error::Result;
use manifest::{sha256_hex, RunManifest, CONFIG_SNAPSHOT};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

#[derive(Debug, Parser)]
#[command(name = "scenforge", version, about = "Scenario generation and search from traffic video")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract key frames from frames or a flow field.
    Extract(commands::extract::ExtractArgs),
    /// Describe key frames as an abstract scenario.
    Abstract(commands::describe::AbstractArgs),
    /// Generate a concrete scenario program from an abstract scenario.
    Synth(commands::synth::SynthArgs),
    /// Check a scenario against its abstract source.
    Inspect(commands::inspect::InspectArgs),
    /// Search for safety violations of a driving policy.
    Search(commands::search::SearchArgs),
    /// Rerun recorded violations.
    Replay(commands::replay::ReplayArgs),
    /// Aggregate search results into tables.
    Report(commands::report::ReportArgs),
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Abstract(_) => "abstract",
            Command::Synth(_) => "synth",
            Command::Inspect(_) => "inspect",
            Command::Search(_) => "search",
            Command::Replay(_) => "replay",
            Command::Report(_) => "report",
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut snapshot = serde_json::to_string_pretty(&config).expect("config serializes");
    snapshot.push('\n');
    let hash = sha256_hex(snapshot.as_bytes());
    let seed = config.seed;
    let mut session = Session::new(config, out.clone(), seed);
    let stage = cli.command.stage();
    let started = SystemTime::now();
    let clock = Instant::now();
    let result = match &cli.command {
        Command::Extract(a) => commands::extract::run(&mut session, a),
        Command::Abstract(a) => commands::describe::run(&mut session, a),
        Command::Synth(a) => commands::synth::run(&mut session, a),
        Command::Inspect(a) => commands::inspect::run(&mut session, a),
        Command::Search(a) => commands::search::run(&mut session, a),
        Command::Replay(a) => commands::replay::run(&mut session, a),
        Command::Report(a) => commands::report::run(&mut session, a),
    };
    // artifacts already written are listed even when the stage failed later
    if !session.written().is_empty() {
        let mut written = session.written().to_vec();
        let snapshot_path = out.join(CONFIG_SNAPSHOT);
        manifest::write_atomic(&snapshot_path, snapshot.as_bytes())?;
        written.push(snapshot_path);
        let mut m = RunManifest::open(&out, &hash)?;
        m.record(stage, &out, &written, started, clock.elapsed().as_secs_f64());
        m.save(&out)?;
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
