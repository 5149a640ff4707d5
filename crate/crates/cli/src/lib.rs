//! Experiment runner for the `hibsa` solver: TOML configs in, CSV traces and summaries out.

pub mod config;
pub mod experiment;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ProblemSpec, SolverSpec};
pub use experiment::{run_job, RunOutcome};
pub use runner::{gradcheck, run_checks, run_experiment, summarize, CheckResult, RunError, SummaryRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CHECK: u8 = 3;

/// Restricts `config` to one preset.
pub fn select_preset(config: &mut ExperimentConfig, name: &str) -> Result<(), ConfigError> {
    let available = config.problem.available_presets();
    if !available.iter().any(|p| p == name) {
        return Err(ConfigError {
            violations: vec![format!(
                "unknown preset `{name}` for {} (available: {})",
                config.problem.name(),
                available.join(", ")
            )],
        });
    }
    config.presets = vec![name.to_string()];
    Ok(())
}
