use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cpofdm_radar::cli::{self, output, validate_text, LoadedConfig, Stamp};
use cpofdm_radar::Error;

#[derive(Parser)]
#[command(name = "cpofdm-radar", version, about = "CP-OFDM MIMO radar simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `noise.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `noise.trials`.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Check a config and report every violated constraint.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the transmit waveforms (`antenna,n,re,im`) for a config.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// Directory for `waveforms.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_valid(path: &Path, seed: Option<u64>, trials: Option<usize>) -> Result<LoadedConfig, i32> {
    let mut loaded = cli::load_config(path).map_err(|e| report(path, &e))?;
    if let Some(s) = seed {
        loaded.config.noise.seed = s;
    }
    if let Some(t) = trials {
        loaded.config.noise.trials = t;
    }
    let diags = validate_text(&loaded.config, &loaded.text);
    if diags.is_empty() {
        Ok(loaded)
    } else {
        for d in &diags {
            eprintln!("{}: {d}", path.display());
        }
        Err(cli::EXIT_CONFIG)
    }
}

fn report(path: &Path, err: &Error) -> i32 {
    eprintln!("{}: error: {err}", path.display());
    cli::exit_code(err)
}

fn execute(args: Args) -> i32 {
    match args.command {
        Command::Validate { config } => match load_valid(&config, None, None) {
            Ok(_) => {
                println!("{}: ok", config.display());
                cli::EXIT_OK
            }
            Err(code) => code,
        },
        Command::Run { config, out, seed, trials } => {
            let loaded = match load_valid(&config, seed, trials) {
                Ok(l) => l,
                Err(code) => return code,
            };
            let stamp = Stamp { config_sha256: loaded.sha256, seed: loaded.config.noise.seed };
            let result = cli::run(&loaded.config, &stamp).and_then(|o| output::write_output(&out, &o).map(|_| o));
            match result {
                Ok(o) => {
                    println!("wrote {} files to {}", o.files.len(), out.display());
                    cli::EXIT_OK
                }
                Err(e) => report(&config, &e),
            }
        }
        Command::Design { config, out } => {
            let loaded = match load_valid(&config, None, None) {
                Ok(l) => l,
                Err(code) => return code,
            };
            let stamp = Stamp { config_sha256: loaded.sha256, seed: loaded.config.noise.seed };
            let result = cli::design(&loaded.config, &stamp).and_then(|csv| match &out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("waveforms.csv"), csv)?;
                    Ok(())
                }
                None => Ok(std::io::stdout().write_all(csv.as_bytes())?),
            });
            match result {
                Ok(()) => cli::EXIT_OK,
                Err(e) => report(&config, &e),
            }
        }
    }
}

fn main() -> ExitCode {
    let code = execute(Args::parse());
    ExitCode::from(code as u8)
}
