use std::path::PathBuf;
use std::process::ExitCode;

use asymphot::DispersionConvention;
use asymphot_cli::config::PRESETS;
use asymphot_cli::scenario::{run_scenario, sweep};
use asymphot_cli::{load_config, with_threads, write_tables, CliError, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "asymphot",
    version,
    about = "Photon-pair rates in Fabry-Perot cavities"
)]
struct Cli {
    /// Directory the CSV files are written to.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Write raw rates instead of max-normalized ones.
    #[arg(long, global = true)]
    no_normalize: bool,

    /// Linear dispersion form: `standard` or `verbatim-paper`.
    #[arg(long, global = true, value_parser = parse_convention)]
    dispersion_convention: Option<DispersionConvention>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every table of a scenario (a config file or `@preset`).
    Run { config: String },
    /// Run only the sweep table of a scenario.
    Sweep { config: String },
    /// List the built-in scenarios.
    Scenarios,
}

fn parse_convention(s: &str) -> Result<DispersionConvention, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        no_normalize: cli.no_normalize,
        convention: cli.dispersion_convention,
    };
    let (arg, only_sweep) = match &cli.command {
        Command::Scenarios => {
            for p in PRESETS {
                println!("@{:<20} {}", p.name, p.summary);
            }
            return Ok(());
        }
        Command::Run { config } => (config, false),
        Command::Sweep { config } => (config, true),
    };
    let mut cfg = load_config(arg)?;
    overrides.apply(&mut cfg);
    let tables = with_threads(cli.threads, || {
        if only_sweep {
            sweep(&cfg).map(|t| vec![t])
        } else {
            run_scenario(&cfg)
        }
    })??;
    for path in write_tables(&cli.out, &cfg, &tables)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
