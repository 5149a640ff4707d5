use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hibsa_cli::runner::{apply_overrides, GRADCHECK_TOL};
use hibsa_cli::{
    gradcheck, load_config, run_checks, run_experiment, select_preset, ConfigError, ExperimentConfig,
    EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER,
};

#[derive(Parser)]
#[command(
    name = "hibsa-cli",
    version,
    about = "Run min-max solver experiments from a TOML config"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (preset, seed) pair and write CSV artifacts.
    Run {
        config: PathBuf,
        /// Use seeds 0..N instead of the configured list.
        #[arg(long)]
        seeds: Option<u64>,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run a single preset.
        #[arg(long)]
        preset: Option<String>,
        /// Evaluate the experiment's thresholds and exit 3 on a miss.
        #[arg(long)]
        check: bool,
    },
    /// Check a config against the schema without running anything.
    Validate { config: PathBuf },
    /// Compare analytic and finite-difference gradients at random feasible points.
    Gradcheck {
        config: PathBuf,
        #[arg(long)]
        seeds: Option<u64>,
    },
}

fn report_config_error(e: &ConfigError) -> ExitCode {
    for v in &e.violations {
        eprintln!("config error: {v}");
    }
    ExitCode::from(EXIT_CONFIG)
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    load_config(path).map_err(|e| report_config_error(&e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!(
                    "ok: {} experiment, presets [{}], {} seeds",
                    c.problem.name(),
                    c.presets.join(", "),
                    c.seeds.len()
                );
                ExitCode::from(EXIT_OK)
            }
            Err(code) => code,
        },
        Command::Run {
            config,
            seeds,
            out,
            preset,
            check,
        } => {
            let mut c = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if seeds == Some(0) {
                return report_config_error(&ConfigError {
                    violations: vec!["--seeds must be positive".into()],
                });
            }
            apply_overrides(&mut c, seeds, out);
            if let Some(name) = preset {
                if let Err(e) = select_preset(&mut c, &name) {
                    return report_config_error(&e);
                }
            }
            let outcomes = match run_experiment(&c) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(EXIT_SOLVER);
                }
            };
            println!("wrote {} runs to {}", outcomes.len(), c.output_dir.display());
            if !check {
                return ExitCode::from(EXIT_OK);
            }
            let mut missed = false;
            for r in run_checks(&c, &outcomes) {
                let status = match r.passed {
                    Some(true) => "PASS",
                    Some(false) => {
                        missed = true;
                        "FAIL"
                    }
                    None => "SKIP",
                };
                println!("check [{status}] {}: {}", r.name, r.detail);
            }
            ExitCode::from(if missed { EXIT_CHECK } else { EXIT_OK })
        }
        Command::Gradcheck { config, seeds } => {
            let mut c = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            apply_overrides(&mut c, seeds, None);
            match gradcheck(&c) {
                Ok(results) => {
                    let mut missed = false;
                    for (seed, err) in results {
                        let ok = err <= GRADCHECK_TOL;
                        missed |= !ok;
                        println!(
                            "seed {seed}: max relative error {err:.3e} [{}]",
                            if ok { "PASS" } else { "FAIL" }
                        );
                    }
                    ExitCode::from(if missed { EXIT_CHECK } else { EXIT_OK })
                }
                Err(e) => {
                    eprintln!("gradcheck failed: {e}");
                    ExitCode::from(EXIT_SOLVER)
                }
            }
        }
    }
}
