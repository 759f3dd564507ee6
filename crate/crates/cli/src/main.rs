use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metaug_cli::commands::{self, SineDemoConfig};
use metaug_cli::{ExperimentConfig, Method, Overrides};

#[derive(Parser)]
#[command(
    name = "metaug",
    version,
    about = "Synthetic minority augmentation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file, or the name of a dataset in the config
    #[arg(long)]
    dataset: Option<String>,
    /// Methods to run, comma separated
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Target imbalance ratio
    #[arg(long)]
    ir: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Master seed (replaces the configured seed list)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, balance / induce imbalance and write preprocessed features
    Prep(Common),
    /// Train baseline classifiers over the folds and save them
    Train(Common),
    /// Run the explicit-gradient meta loop over the folds
    MetaTrain(Common),
    /// Every configured method on every dataset, seed and fold
    Bench(Common),
    /// Toy sine regression sweep
    SineDemo {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Single seed instead of the configured sweep
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training points
        #[arg(long)]
        k1: Option<usize>,
        /// Validation points
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long)]
        n_synth: Option<usize>,
    },
    /// Rebuild tables and plots from the CSVs of an earlier run
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_svg: bool,
    },
}

fn experiment(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        dataset: c.dataset.clone(),
        methods: (!c.method.is_empty()).then(|| c.method.clone()),
        ir: c.ir,
        folds: c.folds,
        seed: c.seed,
        out: c.out.clone(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Vec<PathBuf>> {
    Ok(match cli.command {
        Command::Prep(c) => commands::prep(&experiment(&c)?)?,
        Command::Train(c) => {
            let mut cfg = experiment(&c)?;
            if c.method.is_empty() {
                cfg.methods.retain(|&m| m != Method::ExplicitGradient);
            }
            commands::train(&cfg)?
        }
        Command::MetaTrain(c) => commands::meta_train(&experiment(&c)?)?,
        Command::Bench(c) => commands::bench(&experiment(&c)?)?,
        Command::SineDemo {
            config,
            seed,
            out,
            k1,
            k2,
            n_synth,
        } => {
            let mut cfg = match config {
                Some(p) => SineDemoConfig::load(&p)?,
                None => SineDemoConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            cfg.task.k1 = k1.unwrap_or(cfg.task.k1);
            cfg.task.k2 = k2.unwrap_or(cfg.task.k2);
            cfg.task.n_synth = n_synth.unwrap_or(cfg.task.n_synth);
            commands::sine_demo(&cfg)?
        }
        Command::Report { out, no_svg } => commands::report(&out, !no_svg)?,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
