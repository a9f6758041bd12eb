use clap::Parser;
use ebl_cli::config::{Experiment, ExperimentConfig};
use ebl_cli::{run_experiment, EXIT_CHECK_FAILED, EXIT_COMPUTE, EXIT_CONFIG, EXIT_OK};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ebl", version, about = "Run entropy boundary layer experiments")]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Experiment to run (overrides `experiment`).
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// Halve the profile, sweep, family and direct-solve resolutions, for smoke runs.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(x) = args.experiment {
        cfg.experiment = x;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }
    if args.quick {
        cfg.quick();
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match run_experiment(&cfg, &dir) {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_COMPUTE as u8)
        }
        Ok(run) => {
            for c in &run.checks {
                println!("{} {}: measured {:e} threshold {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.measured, c.threshold);
            }
            println!("manifest: {}", dir.join("manifest.tsv").display());
            ExitCode::from(if run.all_pass() { EXIT_OK } else { EXIT_CHECK_FAILED } as u8)
        }
    }
}
