use std::path::PathBuf;
use std::process::ExitCode;

use adtrap::{cmd_run, cmd_sweep, cmd_validate, parse_grid, parse_seeds, CliError};
use clap::{Parser, Subcommand};

/// Simulate display-ad campaigns and the audience-counter attack.
#[derive(Parser)]
#[command(name = "adtrap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file without running it.
    Validate { file: PathBuf },
    /// Run a scenario, attack it and print the attribution summary.
    Run {
        file: PathBuf,
        /// Overrides the scenario's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trace, report, log and attribution files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario over a parameter grid and several seeds.
    Sweep {
        file: PathBuf,
        /// `key=v1,v2,...`; keys: window_length, visit_rate, audience_count, rival_bid.
        #[arg(long = "grid")]
        grid: Vec<String>,
        /// Comma-separated; replaces the scenario's `seed`.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => {
            let r = cmd_validate(&file)?;
            println!(
                "{}: valid ({} users, {} websites, {} campaigns, {} probed audiences)",
                file.display(),
                r.users,
                r.websites,
                r.campaigns,
                r.probed_audiences
            );
        }
        Command::Run { file, seed, out } => {
            let output = cmd_run(&file, seed, out.as_deref())?;
            for p in &output.artifacts {
                log::info!("wrote {}", p.display());
            }
            println!("{}", output.summary_line());
        }
        Command::Sweep {
            file,
            grid,
            seeds,
            out,
        } => {
            let seeds = parse_seeds(&seeds)?;
            let grid = parse_grid(&grid)?;
            let output = cmd_sweep(&file, &grid, &seeds, out.as_deref())?;
            for row in &output.rows {
                let params: Vec<String> =
                    row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let attack = row
                    .attack
                    .as_ref()
                    .map(ToString::to_string)
                    .unwrap_or_default();
                println!("seed={} {} {}", row.seed, params.join(" "), attack);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ADTRAP_LOG")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
