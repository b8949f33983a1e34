use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "slp", version, about = "Symbol-level precoding link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write CSV/manifest artifacts.
    Run {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv, summary.csv, manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for the (realization, eps) cells.
        #[arg(long, env = "SLP_THREADS")]
        threads: Option<usize>,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a configuration and run a tiny smoke trial.
    Check {
        /// Experiment configuration file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, threads, seed } => {
            slp_cli::cmd_run(&config, &out, threads, seed)
        }
        Command::Check { config } => slp_cli::cmd_check(&config),
    };
    std::process::exit(code);
}
