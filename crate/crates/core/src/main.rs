use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use elabc::experiments::{
    concentration_test, coverage_study, density_from_chain, run_inference, ConcentrationConfig,
    CoverageConfig, RunConfig,
};
use elabc::{Error, Result};

/// Empirical-likelihood ABC experiments.
///
/// Every flag can also be given as a config key of the same name (with `_`
/// for `-`); config keys take precedence over flags.
#[derive(Parser)]
#[command(name = "elabc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one posterior and write chain.csv, summary.json, manifest.json.
    Run(StudyArgs),
    /// Credible-interval coverage study of the normal example.
    Coverage(StudyArgs),
    /// Kernel density table of each chain coordinate.
    Density(DensityArgs),
    /// Posterior sd across increasing dataset sizes in the normal example.
    Concentration(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    /// JSON config file with keys `chain`, `grid`, `output`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chain CSV written by `elabc run`.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Grid points per coordinate.
    #[arg(long)]
    grid: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityConfig {
    chain: PathBuf,
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default)]
    output: Option<PathBuf>,
}

fn default_grid() -> usize {
    512
}

fn insert<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

/// Flags overlaid by the config file's keys, then parsed as `T`.
fn merged<T: DeserializeOwned>(flags: Map<String, Value>, config: Option<&Path>) -> Result<T> {
    let mut merged = flags;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(keys) = value else {
            return Err(Error::Config(format!("{} must hold a JSON object", path.display())));
        };
        merged.extend(keys);
    }
    let context = config.map_or_else(|| "flags".to_string(), |p| p.display().to_string());
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::Config(format!("{context}: {e}")))
}

fn study_flags(a: &StudyArgs) -> Map<String, Value> {
    let mut m = Map::new();
    insert(&mut m, "seed", a.seed);
    insert(&mut m, "iterations", a.iterations);
    insert(&mut m, "burnin", a.burnin);
    insert(&mut m, "output_dir", a.output_dir.as_ref());
    m
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let cfg: RunConfig = merged(study_flags(&a), a.config.as_deref())?;
            let outcome = run_inference(&cfg)?;
            print_json(&outcome.summary)
        }
        Command::Coverage(a) => {
            let cfg: CoverageConfig = merged(study_flags(&a), a.config.as_deref())?;
            print_json(&coverage_study(&cfg)?)
        }
        Command::Concentration(a) => {
            let cfg: ConcentrationConfig = merged(study_flags(&a), a.config.as_deref())?;
            print_json(&concentration_test(&cfg)?)
        }
        Command::Density(a) => {
            let mut flags = Map::new();
            insert(&mut flags, "chain", a.chain.as_ref());
            insert(&mut flags, "grid", a.grid);
            insert(&mut flags, "output", a.output.as_ref());
            let cfg: DensityConfig = merged(flags, a.config.as_deref())?;
            density_from_chain(&cfg.chain, cfg.grid, cfg.output.as_deref()).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
