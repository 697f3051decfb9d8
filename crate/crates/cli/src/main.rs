use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fsidwr::driver::{format_summary, run_adaptive, Benchmark, RunConfig, RESULTS_FILE};
use fsidwr::dwr::MarkingStrategy;

#[derive(Parser)]
#[command(name = "fsidwr", version, about = "Adaptive stationary FSI with goal-oriented error control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        max_loops: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        marking: Option<Marking>,
    },
    /// Print a built-in preset as a config file.
    Preset {
        #[arg(value_enum)]
        name: Preset,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Marking {
    PuThreshold,
    DofFraction,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fsi1,
    Flow2d1,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Preset { name } => {
            let b = match name {
                Preset::Fsi1 => Benchmark::Fsi1,
                Preset::Flow2d1 => Benchmark::Flow2d1,
            };
            print!("{}", toml::to_string(&RunConfig::preset(b))?);
        }
        Command::Run {
            config,
            max_loops,
            tol,
            alpha,
            output,
            marking,
        } => {
            let mut cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(n) = max_loops {
                cfg.max_loops = n;
            }
            if let Some(t) = tol {
                cfg.tol = t;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(o) = output {
                cfg.output = o;
            }
            if let Some(m) = marking {
                cfg.marking = match m {
                    Marking::PuThreshold => MarkingStrategy::PuThreshold,
                    Marking::DofFraction => MarkingStrategy::DofFraction,
                };
            }
            cfg.validate()?;
            let records = run_adaptive(&cfg)?;
            let table = std::fs::read_to_string(cfg.output.join(RESULTS_FILE))?;
            print!("{table}\n{}", format_summary(&records.last().expect("at least one loop").summary));
        }
    }
    Ok(())
}
