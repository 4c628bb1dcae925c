//! `qdm`: train, sample, evaluate and export quantum denoising diffusion
//! models from a single JSON run configuration.

mod commands;
mod config;
mod error;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::run::{Context, DATA_DIR_ENV, DEFAULT_DATA_DIR};

#[derive(Parser, Debug)]
#[command(
    name = "qdm",
    version,
    about = "Quantum denoising diffusion models on a state-vector simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the autoencoder of a latent model.
    TrainAe(Common),
    /// Train the diffusion circuits.
    TrainQdm(Common),
    /// Generate samples as PGM images and a CSV of vectors.
    Sample(Common),
    /// Fréchet distance, WaM and (for conditioned models) per-digit ROC-AUC.
    Evaluate(Common),
    /// Write OpenQASM 2.0 circuits.
    ExportQasm(Common),
    /// Compare exact, finite-shot and depolarized outputs on one prior draw.
    NoiseStudy(Common),
    /// Scatter plots of reference and generated vectors in PCA coordinates.
    PlotPca(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration. Fields left out are taken from its preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset: full_quantum, latent, latent_conditioned or hardware.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override one config field by dotted path, e.g. `model.epochs=5`.
    /// Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Output directory. Defaults to `runs/<timestamp>`; an existing
    /// `config.json` inside it is reused when no --config or --preset is given.
    #[arg(long, value_name = "DIR")]
    run_dir: Option<PathBuf>,
    /// MNIST IDX directory. Defaults to $QDM_DATA_DIR, then `data/mnist`.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Missing(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn context(c: &Common) -> Result<Context, CliError> {
    let run_dir = c
        .run_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(chrono::Local::now().format("%Y%m%d-%H%M%S").to_string()));
    let document = match (&c.config, &c.preset) {
        (Some(p), _) => Some(read_json(p)?),
        (None, None) if run_dir.join("config.json").is_file() => Some(read_json(&run_dir.join("config.json"))?),
        _ => None,
    };
    let mut cfg = config::resolve(document, c.preset.as_deref(), &c.overrides)?;
    let data_dir = c
        .data_dir
        .clone()
        .or_else(|| cfg.data.dir.clone())
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR));
    if !data_dir.is_dir() {
        return Err(CliError::Missing(format!(
            "data directory {} not found",
            data_dir.display()
        )));
    }
    for p in [&cfg.paths.autoencoder, &cfg.paths.checkpoint].into_iter().flatten() {
        if !p.is_file() {
            return Err(CliError::Missing(format!("{} not found", p.display())));
        }
    }
    cfg.data.dir = Some(data_dir.clone());
    Ok(Context::new(cfg, run_dir, data_dir))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    let (common, f): (Common, fn(&Context) -> Result<(), CliError>) = match cmd {
        Command::TrainAe(c) => (c, commands::train_ae),
        Command::TrainQdm(c) => (c, commands::train_qdm),
        Command::Sample(c) => (c, commands::sample_cmd),
        Command::Evaluate(c) => (c, commands::evaluate),
        Command::ExportQasm(c) => (c, commands::export_qasm_cmd),
        Command::NoiseStudy(c) => (c, commands::noise_study),
        Command::PlotPca(c) => (c, commands::plot_pca),
    };
    let ctx = context(&common)?;
    ctx.write_config()?;
    f(&ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            let err = match e.kind() {
                ErrorKind::MissingRequiredArgument => CliError::Missing(first),
                ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    CliError::Missing("a subcommand is required; see qdm --help".into())
                }
                _ => CliError::Config(first),
            };
            eprintln!("{}", err.to_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
