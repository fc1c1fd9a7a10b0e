use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gridrisk_cli::{cmd_acopf, cmd_detect, cmd_report, cmd_simulate, cmd_synth, RunConfig, RunOutcome};

#[derive(Parser, Debug)]
#[command(name = "gridrisk", version, about = "Grid data synthesis, anomaly detection and ACOPF generalization benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; missing sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed of the section the command uses.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Directory searched for `<case>.toml` before the bundled cases.
    #[arg(long, global = true, env = "GRIDRISK_CASE_DIR")]
    case_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Draw a load-profile population and its step/aggregate statistics.
    Synth,
    /// Run a scenario and export the labelled measurement stream.
    Simulate,
    /// Score a stream with the selected detectors.
    Detect,
    /// Run the ACOPF data-augmentation sweep.
    Acopf,
    /// Summarize and plot earlier sweep and detection outputs.
    Report,
}

fn run(cli: &Cli) -> Result<RunOutcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.out.clone(), cli.case_dir.clone());
    match cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Detect => cmd_detect(&cfg),
        Command::Acopf => cmd_acopf(&cfg),
        Command::Report => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = run(&cli).unwrap_or_else(|e| RunOutcome { errors: vec![format!("{e:#}")], ..Default::default() });
    print!("{}", outcome.render());
    if outcome.failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
