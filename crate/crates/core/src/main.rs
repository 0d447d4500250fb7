use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foldwise::cli::{
    cmd_ensemble, cmd_evaluate, cmd_split, cmd_xai, CommandOutcome, Overrides, RunConfig,
};
use foldwise::Result;

#[derive(Parser)]
#[command(
    name = "foldwise",
    version,
    about = "Splits, fold ensembles, metrics and saliency maps for k-fold classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stratified train/test_models/test_ensemble split and k-fold plan.
    Split(Common),
    /// Soft majority vote and random forest over fold predictions.
    Ensemble(Common),
    /// Classification reports, confusion counts and ROC curves.
    Evaluate(Common),
    /// Grad-CAM overlays, cross-fold mean heatmaps and LIME renderings.
    Xai(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of folds.
    #[arg(long)]
    k: Option<usize>,
    /// Sample index file.
    #[arg(long)]
    index: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            k: self.k,
            index: self.index.clone(),
        };
        RunConfig::load(&self.config, &overrides)
    }
}

fn run(cli: Cli) -> Result<CommandOutcome> {
    match cli.command {
        Command::Split(c) => cmd_split(&c.load()?),
        Command::Ensemble(c) => cmd_ensemble(&c.load()?),
        Command::Evaluate(c) => cmd_evaluate(&c.load()?),
        Command::Xai(c) => cmd_xai(&c.load()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FOLDWISE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for p in &outcome.written {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
