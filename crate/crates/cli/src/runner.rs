//! Batch execution, CSV artifacts, summary statistics and the `--check` thresholds.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use hibsa::diagnostics::finite_difference_check;
use hibsa::prox::project;
use hibsa::trace::{format_float, write_trace_csv};
use hibsa::BlockPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{lse_preset, ExperimentConfig, ProblemSpec};
use crate::experiment::{build_problem, run_job, RunOutcome};

pub const RUNS_HEADER: &str = "preset,seed,iterations,converged,final_objective,final_gap_norm,metric,value";
pub const SUMMARY_HEADER: &str = "preset,quantity,count,mean,std";

pub const GRADCHECK_POINTS: usize = 20;
pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOL: f64 = 1e-5;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{preset} seed {seed}: {source}")]
    Solver {
        preset: String,
        seed: u64,
        source: hibsa::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn trace_file_name(preset: &str, seed: u64) -> String {
    format!("{preset}_seed{seed}.csv")
}

/// Runs every (preset, seed) pair in parallel, then writes traces, `runs.csv` and `summary.csv`.
///
/// Outcomes come back in (preset, seed) order regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunOutcome>, RunError> {
    let jobs: Vec<(&str, u64)> = config
        .presets
        .iter()
        .flat_map(|p| config.seeds.iter().map(move |s| (p.as_str(), *s)))
        .collect();
    fs::create_dir_all(&config.output_dir)?;
    let results: Vec<Result<RunOutcome, RunError>> = jobs
        .par_iter()
        .map(|(preset, seed)| {
            let outcome = run_job(config, preset, *seed).map_err(|source| RunError::Solver {
                preset: preset.to_string(),
                seed: *seed,
                source,
            })?;
            if let Some(trace) = &outcome.trace {
                let path = config.output_dir.join(trace_file_name(preset, *seed));
                let mut out = BufWriter::new(File::create(path)?);
                write_trace_csv(&mut out, trace)?;
                out.flush()?;
            }
            log::info!(
                "{preset} seed {seed}: {} iterations, final gap {:e}",
                outcome.iterations,
                outcome.final_gap
            );
            Ok(outcome)
        })
        .collect();
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    write_runs_csv(&config.output_dir.join("runs.csv"), &outcomes)?;
    write_summary_csv(
        &config.output_dir.join("summary.csv"),
        &summarize(&config.presets, &outcomes),
    )?;
    Ok(outcomes)
}

fn write_runs_csv(path: &Path, outcomes: &[RunOutcome]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{RUNS_HEADER}")?;
    for o in outcomes {
        for (name, value) in &o.metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{name},{}",
                o.preset,
                o.seed,
                o.iterations,
                o.converged,
                format_float(o.final_objective),
                format_float(o.final_gap),
                format_float(*value)
            )?;
        }
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub preset: String,
    pub quantity: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-preset statistics over seeds: iterations, final objective, final gap, then each metric.
pub fn summarize(presets: &[String], outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for preset in presets {
        let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| &o.preset == preset).collect();
        let Some(first) = runs.first() else { continue };
        let mut quantities: Vec<(String, Vec<f64>)> = vec![
            (
                "iterations".into(),
                runs.iter().map(|o| o.iterations as f64).collect(),
            ),
            (
                "final_objective".into(),
                runs.iter().map(|o| o.final_objective).collect(),
            ),
            (
                "final_gap_norm".into(),
                runs.iter().map(|o| o.final_gap).collect(),
            ),
        ];
        for (k, (name, _)) in first.metrics.iter().enumerate() {
            quantities.push((name.to_string(), runs.iter().map(|o| o.metrics[k].1).collect()));
        }
        for (quantity, values) in quantities {
            let (mean, std) = mean_std(&values);
            rows.push(SummaryRow {
                preset: preset.clone(),
                quantity,
                count: values.len(),
                mean,
                std,
            });
        }
    }
    rows
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.preset,
            r.quantity,
            r.count,
            format_float(r.mean),
            format_float(r.std)
        )?;
    }
    out.flush()
}

/// Outcome of one `--check` threshold. `passed` is `None` when a needed preset did not run.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: Option<bool>,
    pub detail: String,
}

fn metric_mean(outcomes: &[RunOutcome], preset: &str, metric: &str) -> Option<f64> {
    let values: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.preset == preset)
        .filter_map(|o| o.metrics.iter().find(|(n, _)| *n == metric).map(|(_, v)| *v))
        .collect();
    (!values.is_empty()).then(|| mean_std(&values).0)
}

fn skipped(name: &'static str, missing: &str) -> CheckResult {
    CheckResult {
        name,
        passed: None,
        detail: format!("preset {missing} did not run"),
    }
}

pub fn run_checks(config: &ExperimentConfig, outcomes: &[RunOutcome]) -> Vec<CheckResult> {
    let ran = |p: &str| outcomes.iter().any(|o| o.preset == p);
    match &config.problem {
        ProblemSpec::Bilinear { .. } => {
            let trend = |preset: &str, grows: bool| {
                let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.preset == preset).collect();
                let ok = runs
                    .iter()
                    .filter(|o| (o.final_gap > o.first_gap) == grows)
                    .count();
                (ok == runs.len(), format!("{ok}/{} seeds", runs.len()))
            };
            let mut out = Vec::new();
            for (name, preset, grows) in [
                ("gda gap grows", "gda", true),
                ("hibsa-fig1 gap shrinks", "hibsa-fig1", false),
            ] {
                if ran(preset) {
                    let (ok, detail) = trend(preset, grows);
                    out.push(CheckResult {
                        name,
                        passed: Some(ok),
                        detail,
                    });
                } else {
                    out.push(skipped(name, preset));
                }
            }
            out
        }
        ProblemSpec::Jamming { .. } => {
            let name = "jammer lowers mean sum rate";
            match (
                metric_mean(outcomes, "hibsa", "sum_rate"),
                metric_mean(outcomes, "frozen", "sum_rate"),
            ) {
                (Some(active), Some(frozen)) => vec![CheckResult {
                    name,
                    passed: Some(active < frozen),
                    detail: format!("active {active:.6} vs frozen {frozen:.6}"),
                }],
                (None, _) => vec![skipped(name, "hibsa")],
                (_, None) => vec![skipped(name, "frozen")],
            }
        }
        ProblemSpec::MaxMin { nu, .. } => {
            let mut sorted = nu.clone();
            sorted.sort_by(f64::total_cmp);
            let lse: Vec<(f64, f64)> = sorted
                .iter()
                .filter_map(|v| metric_mean(outcomes, &lse_preset(*v), "min_rate").map(|m| (*v, m)))
                .collect();
            let hibsa = metric_mean(outcomes, "hibsa", "min_rate");
            let mut out = Vec::new();
            let name = "hibsa min rate beats lse";
            match hibsa {
                Some(h) if !lse.is_empty() => {
                    let best = lse.iter().map(|(_, m)| *m).fold(f64::NEG_INFINITY, f64::max);
                    out.push(CheckResult {
                        name,
                        passed: Some(h >= best),
                        detail: format!("hibsa {h:.6} vs best lse {best:.6}"),
                    });
                }
                Some(_) => out.push(skipped(name, "lse")),
                None => out.push(skipped(name, "hibsa")),
            }
            let name = "lse min rate grows with nu";
            if lse.len() >= 2 {
                let ok = lse.windows(2).all(|w| w[1].1 >= w[0].1);
                let detail = lse
                    .iter()
                    .map(|(v, m)| format!("nu {v}: {m:.6}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push(CheckResult {
                    name,
                    passed: Some(ok),
                    detail,
                });
            } else {
                out.push(skipped(name, "lse (two values of nu)"));
            }
            out
        }
        ProblemSpec::Robust { .. } => {
            let name = "weight moves toward the worse domain";
            match metric_mean(outcomes, "hibsa", "weight_shift") {
                Some(shift) => vec![CheckResult {
                    name,
                    passed: Some(shift > 0.0),
                    detail: format!("mean shift {shift:.6}"),
                }],
                None => vec![skipped(name, "hibsa")],
            }
        }
    }
}

/// Largest finite-difference relative error over random feasible points, per seed.
pub fn gradcheck(config: &ExperimentConfig) -> Result<Vec<(u64, f64)>, RunError> {
    config
        .seeds
        .par_iter()
        .map(|seed| {
            let err = |source| RunError::Solver {
                preset: "gradcheck".into(),
                seed: *seed,
                source,
            };
            let problem = build_problem(&config.problem, *seed).map_err(err)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut worst = 0.0f64;
            for _ in 0..GRADCHECK_POINTS {
                let mut draw = |set: &hibsa::ConvexSet| {
                    let bound = set.norm_bound();
                    let scale = if bound.is_finite() { bound } else { 1.0 };
                    let v: Vec<f64> = (0..set.dim())
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            scale * z
                        })
                        .collect();
                    project(set, &v)
                };
                let x = (0..problem.num_blocks())
                    .map(|i| draw(problem.x_set(i)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                let y = draw(problem.y_set()).map_err(err)?;
                let check = finite_difference_check(problem.as_ref(), &BlockPoint::new(x, y), GRADCHECK_STEP)
                    .map_err(err)?;
                worst = worst.max(check.max_error());
            }
            Ok((*seed, worst))
        })
        .collect()
}

/// Applies the `--seeds` and `--out` overrides.
pub fn apply_overrides(config: &mut ExperimentConfig, seeds: Option<u64>, out: Option<PathBuf>) {
    if let Some(n) = seeds {
        config.seeds = (0..n).collect();
    }
    if let Some(dir) = out {
        config.output_dir = dir;
    }
}
