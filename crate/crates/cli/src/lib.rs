//! Experiment runner behind the `ebl` binary.

pub mod config;
pub mod experiments;
pub mod report;

use config::{Experiment, ExperimentConfig};
use experiments::Cache;
use report::Run;
use std::path::Path;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

/// Runs the configured experiment into `out_dir`; returns the run with its checks.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> ebl_core::Result<Run> {
    let mut out = Run::new(out_dir)?;
    // the output directory is left out so that runs differing only in location hash identically
    let resolved = toml::to_string(&ExperimentConfig { out: None, ..cfg.clone() }).map_err(|e| ebl_core::Error::Io(e.to_string()))?;
    out.text("config.resolved.toml", "configuration after flag overrides", &resolved)?;
    let mut cache = Cache::new();
    let all = cfg.experiment == Experiment::All;
    if all || cfg.experiment == Experiment::GroundState {
        experiments::ground_state(cfg, &mut out)?;
    }
    if all || cfg.experiment == Experiment::Layer {
        experiments::layer(cfg, &mut cache, &mut out)?;
    }
    if all || cfg.experiment == Experiment::Assemble {
        experiments::assemble_run(cfg, &mut cache, &mut out)?;
    }
    if all || cfg.experiment == Experiment::ResidualSweep {
        experiments::residual_sweep_run(cfg, &mut cache, &mut out)?;
    }
    if all || cfg.experiment == Experiment::Norms {
        experiments::norms(cfg, &mut out)?;
    }
    if all || cfg.experiment == Experiment::Stability {
        experiments::stability(cfg, &mut out)?;
    }
    out.write_manifest()?;
    Ok(out)
}
