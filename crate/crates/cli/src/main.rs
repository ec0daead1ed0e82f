//! `logitest` — drivers for the classifier-logit two-sample toolkit.

use clap::{Args, Parser, Subcommand};
use logitest_cli::artifacts::OutDir;
use logitest_cli::commands;
use logitest_cli::config::RunConfig;
use logitest_cli::error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "logitest",
    version,
    about = "Classifier-logit two-sample testing toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named profile overriding the config's `profile` key.
    #[arg(long)]
    profile: Option<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample pair and write it as CSV.
    Gen(CommonArgs),
    /// Train the classifier on the training split and save its parameters.
    Train(CommonArgs),
    /// Run calibrated two-sample tests (fresh pipeline, saved parameters,
    /// or precomputed scores).
    Test {
        #[command(flatten)]
        common: CommonArgs,
        /// Precomputed witness scores (CSV with header `set,score`).
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Saved classifier parameters from `train`.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Estimate test power over replicas and emit the summary table.
    Power(CommonArgs),
    /// Sweep trained population loss over network width and sample size.
    LossCurve(CommonArgs),
    /// Emit population witness curves, their summaries, and trained scores.
    Witness(CommonArgs),
    /// Build the manifold approximator and report error versus scale count.
    ManifoldApprox {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated scale counts, e.g. 2,4,6.
        #[arg(long, value_delimiter = ',')]
        kmax: Option<Vec<u32>>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut raw: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(profile) = &common.profile {
        raw.insert("profile".into(), toml::Value::String(profile.clone()));
    }
    RunConfig::parse_str(&toml::to_string(&raw).expect("table serializes"))
}

fn out_dir(common: &CommonArgs, cfg: &RunConfig) -> Result<OutDir, CliError> {
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(cfg.output.dir.as_deref().unwrap_or("out")));
    OutDir::create(&dir)
}

fn run() -> Result<(), CliError> {
    if let Ok(workers) = std::env::var("LOGITEST_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            // A second initialization (e.g. in tests) is harmless.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match &cli.cmd {
        Command::Gen(common) => {
            let cfg = load_config(common)?;
            commands::cmd_gen(&cfg, &out_dir(common, &cfg)?)
        }
        Command::Train(common) => {
            let cfg = load_config(common)?;
            commands::cmd_train(&cfg, &out_dir(common, &cfg)?)
        }
        Command::Test {
            common,
            scores,
            params,
        } => {
            let cfg = load_config(common)?;
            commands::cmd_test(
                &cfg,
                &out_dir(common, &cfg)?,
                scores.as_deref(),
                params.as_deref(),
            )
        }
        Command::Power(common) => {
            let cfg = load_config(common)?;
            commands::cmd_power(&cfg, &out_dir(common, &cfg)?)
        }
        Command::LossCurve(common) => {
            let cfg = load_config(common)?;
            commands::cmd_loss_curve(&cfg, &out_dir(common, &cfg)?)
        }
        Command::Witness(common) => {
            let cfg = load_config(common)?;
            commands::cmd_witness(&cfg, &out_dir(common, &cfg)?)
        }
        Command::ManifoldApprox { common, kmax } => {
            let cfg = load_config(common)?;
            commands::cmd_manifold_approx(&cfg, &out_dir(common, &cfg)?, kmax.clone())
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{}", e.to_json());
        std::process::exit(1);
    }
}
