mod args;
mod commands;
mod output;

use clap::Parser;

use args::{Cli, Command, ExperimentCommand};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match &cli.command {
        Command::Partition(a) => commands::partition(a),
        Command::Modes(a) => commands::modes(a),
        Command::Ridge(a) => commands::ridge(a),
        Command::Bandwidth(a) => commands::bandwidth(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(ExperimentCommand::Modecount(a)) => commands::modecount(a),
        Command::Experiment(ExperimentCommand::Rate(a)) => commands::rate(a),
    }
}
