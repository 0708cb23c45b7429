use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dcfabric::config::{ExperimentConfig, ExperimentName};
use dcfabric::experiment::{run_experiment, write_outputs};

/// Runs datacenter fabric experiments and writes CSV results.
#[derive(Debug, Parser)]
#[command(name = "dcfabric", version)]
struct Args {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Experiment to run; every configured experiment when omitted.
    #[arg(long)]
    experiment: Option<String>,
}

fn run(args: Args) -> dcfabric::Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(dcfabric::Error::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| dcfabric::Error::Config(e.to_string()))?;
    }
    let names = match &args.experiment {
        Some(name) => vec![name.parse::<ExperimentName>()?],
        None => cfg.configured(),
    };
    for name in names {
        let files = run_experiment(&cfg, name)?;
        for path in write_outputs(&cfg.output_dir, &files)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcfabric: {e}");
            ExitCode::FAILURE
        }
    }
}
