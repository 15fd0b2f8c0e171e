mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

/// Finds stops where riders on unsatisfactory routes board, for on-site
/// surveys.
#[derive(Debug, Parser)]
#[command(name = "survey", version)]
struct Cli {
    /// JSON file whose fields override the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the network and rides and cache them in the output directory
    Ingest,
    /// Optimal routes for every ride under all four criteria
    Route,
    /// Preferences and satisfaction verdicts
    Classify,
    /// Stop ranking by probability of unsatisfied departures
    Rank,
    /// Survey reports for the most unsatisfied riders
    Report,
    /// Targeted versus random stop selection on a synthetic city
    Simulate,
    /// Serve the analysis over HTTP
    Serve,
    /// ingest, route, classify, rank and report in order
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.settings.with_config(cli.config.as_deref()).and_then(|s| match cli.command {
        Command::Ingest => commands::ingest(&s),
        Command::Route => commands::route(&s),
        Command::Classify => commands::classify(&s),
        Command::Rank => commands::rank(&s),
        Command::Report => commands::report(&s),
        Command::Simulate => commands::simulate(&s),
        Command::Serve => commands::serve(&s),
        Command::All => commands::all(&s),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
