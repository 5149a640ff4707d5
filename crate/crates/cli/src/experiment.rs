//! Problem construction and single (preset, seed) runs.

use hibsa::problems::{
    BilinearDomain, BilinearProblem, ChannelModel, JammingProblem, LseBaseline, MaxMinProblem, RobustProblem,
};
use hibsa::{gda_trace, hibsa_run, BlockPoint, IterateTrace, MinMaxProblem, Result, Schedule};

use crate::config::{lse_preset, ExperimentConfig, ProblemSpec};

/// Result of one (preset, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub preset: String,
    pub seed: u64,
    /// Absent for the LSE baseline, which has no stationarity trace.
    pub trace: Option<Vec<IterateTrace>>,
    pub iterations: u64,
    pub converged: bool,
    pub first_gap: f64,
    pub final_objective: f64,
    pub final_gap: f64,
    pub metrics: Vec<(&'static str, f64)>,
    pub warnings: Vec<String>,
}

/// The instance HiBSA solves for `seed`.
pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<Box<dyn MinMaxProblem>> {
    Ok(match spec {
        ProblemSpec::Bilinear { .. } => Box::new(bilinear(spec, seed)?),
        ProblemSpec::Jamming {
            users,
            channels,
            snr_db,
        } => Box::new(JammingProblem::new(ChannelModel::random(
            *users, *channels, *snr_db, seed,
        )?)?),
        ProblemSpec::MaxMin {
            users,
            channels,
            snr_db,
            ..
        } => Box::new(MaxMinProblem::new(ChannelModel::random(
            *users, *channels, *snr_db, seed,
        )?)?),
        ProblemSpec::Robust {
            dim,
            samples,
            flip,
            lambda,
            prior,
        } => Box::new(RobustProblem::new(
            RobustProblem::synthetic_domains(*dim, *samples, *flip, seed),
            *lambda,
            prior.clone(),
        )?),
    })
}

fn bilinear(spec: &ProblemSpec, seed: u64) -> Result<BilinearProblem> {
    let ProblemSpec::Bilinear { dim, radius, .. } = spec else {
        unreachable!("bilinear spec expected")
    };
    let domain = match radius {
        Some(r) => BilinearDomain::Ball(*r),
        None => BilinearDomain::Unconstrained,
    };
    BilinearProblem::new(BilinearProblem::random_matrix(*dim, *dim, seed), domain)
}

/// Starting point for `seed`: a random point for the bilinear game, the problem default otherwise.
pub fn start_point(spec: &ProblemSpec, problem: &dyn MinMaxProblem, seed: u64) -> Result<BlockPoint> {
    match spec {
        ProblemSpec::Bilinear { .. } => {
            let p = bilinear(spec, seed)?;
            let start = p.random_start(seed.wrapping_add(1));
            problem.check_point(&start)?;
            Ok(start)
        }
        _ => problem.default_start(),
    }
}

pub fn run_job(config: &ExperimentConfig, preset: &str, seed: u64) -> Result<RunOutcome> {
    let spec = &config.problem;
    match (spec, preset) {
        (
            ProblemSpec::Bilinear {
                gda_eta, gda_lambda, ..
            },
            "gda",
        ) => {
            let p = bilinear(spec, seed)?;
            let start = start_point(spec, &p, seed)?;
            let trace = gda_trace(&p, *gda_eta, *gda_lambda, config.solver.base.max_iter, &start)?;
            let last = trace.last().expect("max_iter is positive");
            let metrics = vec![("optimality_gap", last.gap_norm * last.gap_norm)];
            Ok(traced(preset, seed, trace, false, metrics, Vec::new()))
        }
        (ProblemSpec::Bilinear { .. }, "hibsa-fig1" | "hibsa") => {
            let p = bilinear(spec, seed)?;
            let mut solver = config.solver.resolve(&p.constants().l_x, seed);
            if preset == "hibsa-fig1" {
                solver.schedule = Schedule::Fig1;
            }
            let start = start_point(spec, &p, seed)?;
            let report = hibsa_run(&p, &solver, &start)?;
            let metrics = vec![("optimality_gap", p.optimality_gap(&report.point))];
            Ok(traced(
                preset,
                seed,
                report.trace.clone(),
                report.converged(),
                metrics,
                report.warnings,
            ))
        }
        (
            ProblemSpec::Jamming {
                users,
                channels,
                snr_db,
            },
            "hibsa" | "frozen",
        ) => {
            let model = ChannelModel::random(*users, *channels, *snr_db, seed)?;
            let p = if preset == "frozen" {
                let power = vec![model.jammer_budget / model.channels() as f64; model.channels()];
                JammingProblem::with_frozen_jammer(model, power)?
            } else {
                JammingProblem::new(model)?
            };
            let solver = config.solver.resolve(&p.constants().l_x, seed);
            let report = hibsa_run(&p, &solver, &p.default_start()?)?;
            let metrics = vec![("sum_rate", p.sum_rate(&report.point))];
            Ok(traced(
                preset,
                seed,
                report.trace.clone(),
                report.converged(),
                metrics,
                report.warnings,
            ))
        }
        (
            ProblemSpec::MaxMin {
                users,
                channels,
                snr_db,
                nu,
                lse_max_iter,
                lse_tol,
            },
            _,
        ) => {
            let model = ChannelModel::random(*users, *channels, *snr_db, seed)?;
            if preset == "hibsa" {
                let p = MaxMinProblem::new(model)?;
                let solver = config.solver.resolve(&p.constants().l_x, seed);
                let report = hibsa_run(&p, &solver, &p.default_start()?)?;
                let metrics = vec![("min_rate", p.min_rate(&report.point.x))];
                return Ok(traced(
                    preset,
                    seed,
                    report.trace.clone(),
                    report.converged(),
                    metrics,
                    report.warnings,
                ));
            }
            let nu = nu
                .iter()
                .copied()
                .find(|v| lse_preset(*v) == preset)
                .ok_or_else(|| unknown_preset(spec, preset))?;
            let baseline = LseBaseline::new(model, nu)?;
            let sol = baseline.solve(&baseline.default_start(), *lse_max_iter, *lse_tol)?;
            Ok(RunOutcome {
                preset: preset.to_string(),
                seed,
                trace: None,
                iterations: sol.iterations as u64,
                converged: sol.converged,
                first_gap: f64::NAN,
                final_objective: -sol.surrogate,
                final_gap: f64::NAN,
                metrics: vec![("min_rate", sol.min_rate)],
                warnings: Vec::new(),
            })
        }
        (
            ProblemSpec::Robust {
                dim,
                samples,
                flip,
                lambda,
                prior,
            },
            "hibsa",
        ) => {
            let p = RobustProblem::new(
                RobustProblem::synthetic_domains(*dim, *samples, *flip, seed),
                *lambda,
                prior.clone(),
            )?;
            let solver = config.solver.resolve(&p.constants().l_x, seed);
            let report = hibsa_run(&p, &solver, &p.default_start()?)?;
            let losses = p.losses(&report.point.x[0]);
            let worst = if losses[1] > losses[0] { 1 } else { 0 };
            let metrics = vec![
                ("worst_loss", losses[worst]),
                ("weight_shift", report.point.y[worst] - prior[worst]),
            ];
            Ok(traced(
                preset,
                seed,
                report.trace.clone(),
                report.converged(),
                metrics,
                report.warnings,
            ))
        }
        _ => Err(unknown_preset(spec, preset)),
    }
}

fn unknown_preset(spec: &ProblemSpec, preset: &str) -> hibsa::Error {
    hibsa::Error::InvalidParameter {
        name: "preset",
        reason: format!("`{preset}` is not a {} preset", spec.name()),
    }
}

fn traced(
    preset: &str,
    seed: u64,
    trace: Vec<IterateTrace>,
    converged: bool,
    metrics: Vec<(&'static str, f64)>,
    warnings: Vec<String>,
) -> RunOutcome {
    let first = trace.first().expect("max_iter is positive");
    let last = trace.last().expect("max_iter is positive");
    RunOutcome {
        preset: preset.to_string(),
        seed,
        iterations: last.iter,
        converged,
        first_gap: first.gap_norm,
        final_objective: last.objective,
        final_gap: last.gap_norm,
        metrics,
        warnings,
        trace: Some(trace),
    }
}
