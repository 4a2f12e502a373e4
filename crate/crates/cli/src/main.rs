use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinsqueeze_cli::commands;

#[derive(Parser)]
#[command(name = "spinsqueeze", version, about = "Gaussian-state spin squeezing simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured scenario and write its CSV and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one of the figures.
    Figure {
        #[arg(value_parser = clap::value_parser!(u32).range(1..=5))]
        id: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the coupling rates a config resolves to.
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the grid of deltas, slice counts and seeds in the config's `sweep` table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => commands::load_config(&config).and_then(|cfg| {
            let dir = commands::output_dir(out.as_deref(), Some(&cfg));
            commands::run_command(&cfg, &dir)
        }),
        Command::Figure { id, out } => commands::figure(id, &commands::output_dir(out.as_deref(), None)),
        Command::Rates { config } => commands::load_config(&config).map(|cfg| {
            println!("{}", commands::rates_report(&cfg));
            PathBuf::new()
        }),
        Command::Sweep { config, out } => commands::load_config(&config).and_then(|cfg| {
            let dir = commands::output_dir(out.as_deref(), Some(&cfg));
            commands::sweep(&cfg, &dir)
        }),
    };
    match result {
        Ok(path) => {
            if !path.as_os_str().is_empty() {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
