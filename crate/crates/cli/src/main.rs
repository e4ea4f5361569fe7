use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tvws_pricing_cli::config::load_config;
use tvws_pricing_cli::output::{write_run, Manifest};
use tvws_pricing_cli::presets::{run_preset, DEFAULT_SEED, PRESETS};
use tvws_pricing_cli::{run_experiment, CliError};

/// Hybrid registration and query-plan pricing experiments.
#[derive(Parser)]
#[command(name = "tvws-pricing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment.
    Preset {
        name: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// List the built-in experiments.
    ListPresets,
}

const OUT_ENV: &str = "TVWS_PRICING_OUT";

fn output_dir(explicit: Option<PathBuf>, fallback: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"))
            .join(fallback)
    })
}

fn report(paths: &[PathBuf], dir: &Path) {
    println!("wrote {} files to {}", paths.len(), dir.display());
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let (spec, text) = load_config(&config)?;
            let tables = run_experiment(&spec)?;
            let dir = output_dir(out.or_else(|| spec.output.clone()), &spec.name);
            let paths = write_run(&dir, &tables, Manifest::new(&spec.name, spec.seed, &text))?;
            report(&paths, &dir);
        }
        Command::Preset { name, seed, out } => {
            let tables = run_preset(&name, seed)?;
            let dir = output_dir(out, &name);
            let paths = write_run(&dir, &tables, Manifest::new(&name, seed, &format!("preset {name} seed {seed}")))?;
            report(&paths, &dir);
        }
        Command::Validate { config } => {
            let (spec, _) = load_config(&config)?;
            println!(
                "{}: ok ({}, {} sweep values of {})",
                config.display(),
                spec.scenario,
                spec.sweep.values.len(),
                spec.sweep.param
            );
        }
        Command::ListPresets => {
            for (name, about) in PRESETS {
                println!("{name:<24}{about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
