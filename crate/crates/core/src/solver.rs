//! The HiBSA outer loop, its block updates and the plain GDA baseline.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{potential_concave, potential_strongly_concave, stationarity_gap};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::{add_scaled, dist, dist_sq};
use crate::point::BlockPoint;
use crate::problem::{check_block, MinMaxProblem};
use crate::problems::BilinearProblem;
use crate::prox::{prox_x, prox_y, ConvexSet};
use crate::schedule::{
    check_strongly_concave_conditions, strongly_concave_beta_threshold, Regime, Schedule, ScheduleParams,
};
use crate::trace::IterateTrace;

/// Local model of `f` in block `i` used by the x-update.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Surrogate {
    /// `f(w) + <grad, v - w_i> + (L_{x_i}/2) |v - w_i|^2`.
    #[default]
    QuadraticUpperBound,
    /// Same linearization with a user modulus `mu_i` in place of `L_{x_i}`.
    ProximalLinear { moduli: Vec<f64> },
}

impl Surrogate {
    pub fn modulus(&self, problem: &dyn MinMaxProblem, block: usize) -> f64 {
        match self {
            Surrogate::QuadraticUpperBound => problem.constants().l_x[block],
            Surrogate::ProximalLinear { moduli } => moduli[block],
        }
    }

    pub fn validate(&self, num_blocks: usize) -> Result<()> {
        if let Surrogate::ProximalLinear { moduli } = self {
            if moduli.len() != num_blocks {
                return Err(Error::DimensionMismatch {
                    expected: num_blocks,
                    got: moduli.len(),
                });
            }
            if moduli.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                return Err(invalid("moduli", "surrogate moduli must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub kappa: f64,
    pub schedule: Schedule,
    /// Stop once the stationarity gap falls to this value.
    pub epsilon: f64,
    pub max_iter: u64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Abort instead of warning when the strongly concave step-size rule is violated.
    pub enforce_conditions: bool,
    pub surrogate: Surrogate,
    /// Overrides the default floor `1.01 * max_i L_{x_i}` on `beta^r`.
    pub beta_min: Option<f64>,
    /// Carried into the run state for bookkeeping; the iteration itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            kappa: 3.0,
            schedule: Schedule::Auto,
            epsilon: 1e-6,
            max_iter: 5000,
            inner_tol: 1e-8,
            inner_max_iter: 10_000,
            enforce_conditions: false,
            surrogate: Surrogate::QuadraticUpperBound,
            beta_min: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", format!("must be positive, got {}", self.rho)));
        }
        if !(self.kappa > 2.0) {
            return Err(invalid(
                "kappa",
                format!("kappa must exceed 2, got {}", self.kappa),
            ));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon", "must be nonnegative"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be positive"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(invalid("inner_tol", "must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(invalid("inner_max_iter", "must be positive"));
        }
        self.schedule.validate()
    }

    /// Step-size constants for `problem` under this configuration.
    pub fn schedule_params(&self, problem: &dyn MinMaxProblem) -> ScheduleParams {
        let consts = problem.constants();
        let moduli: Vec<f64> = (0..problem.num_blocks())
            .map(|i| self.surrogate.modulus(problem, i))
            .collect();
        let params = ScheduleParams::new(
            self.rho,
            self.kappa,
            moduli.clone(),
            consts.l_y,
            consts.l_x.clone(),
            moduli,
        );
        match self.beta_min {
            Some(b) => params.with_beta_min(b),
            None => params,
        }
    }
}

/// `beta^r` and `gamma^r` for a given regime, resolved once per run.
#[derive(Debug, Clone)]
pub struct StepRule {
    schedule: Schedule,
    regime: Regime,
    params: ScheduleParams,
    /// Constant `beta` of the strongly concave regime under [`Schedule::Auto`].
    sc_beta: Option<f64>,
}

impl StepRule {
    pub fn new(schedule: &Schedule, regime: Regime, params: ScheduleParams) -> Result<Self> {
        params.validate()?;
        schedule.validate()?;
        let sc_beta = match (schedule, regime) {
            (Schedule::Auto, Regime::StronglyConcave { theta }) => {
                let threshold = strongly_concave_beta_threshold(&params, theta);
                let beta = (threshold.abs() * 1e-3 + threshold).max(params.beta_min);
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(invalid(
                        "beta",
                        format!("cannot pick a positive beta from threshold {threshold}"),
                    ));
                }
                Some(beta)
            }
            _ => None,
        };
        Ok(StepRule {
            schedule: schedule.clone(),
            regime,
            params,
            sc_beta,
        })
    }

    pub fn params(&self) -> &ScheduleParams {
        &self.params
    }

    pub fn beta(&self, r: u64) -> Result<f64> {
        match self.sc_beta {
            Some(b) => Ok(b),
            None if self.schedule == Schedule::Auto => Schedule::Diminishing.beta(r, &self.params),
            None => self.schedule.beta(r, &self.params),
        }
    }

    /// Always 0 in the strongly concave regime.
    pub fn gamma(&self, r: u64) -> Result<f64> {
        if let Regime::StronglyConcave { .. } = self.regime {
            return Ok(0.0);
        }
        match self.schedule {
            Schedule::Auto => Schedule::Diminishing.gamma(r, self.params.rho),
            ref s => s.gamma(r, self.params.rho),
        }
    }
}

/// x-update for block `i`: minimizes the surrogate plus `h_i` and the proximal term over `X_i`.
///
/// `w` holds the blocks `< i` already updated and the remaining blocks and `y` at their
/// previous values.
pub fn x_block_update(
    problem: &dyn MinMaxProblem,
    i: usize,
    w: &BlockPoint,
    beta: f64,
    surrogate: &Surrogate,
) -> Result<Vec<f64>> {
    check_block(problem, i)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    let grad = problem.grad_x(w, i);
    ensure_finite(&grad, || format!("gradient of block {i}"))?;
    let step = surrogate.modulus(problem, i) + beta;
    let v = add_scaled(&w.x[i], -1.0 / step, &grad);
    prox_x(problem.x_regularizer(i), problem.x_set(i), step, &v)
}

/// y-update under strong concavity: one proximal ascent step with step `rho`.
pub fn y_update_strongly_concave(
    problem: &dyn MinMaxProblem,
    x_new: &BlockPoint,
    y_old: &[f64],
    rho: f64,
) -> Result<Vec<f64>> {
    let at = with_y(x_new, y_old);
    let grad = problem.grad_y(&at);
    ensure_finite(&grad, || "y gradient".into())?;
    prox_y(
        problem.y_regularizer(),
        problem.y_set(),
        rho,
        &add_scaled(y_old, rho, &grad),
    )
}

/// y-update under linear coupling, with the `-(gamma/2)|y|^2` penalty solved in closed form.
pub fn y_update_linear(
    problem: &dyn MinMaxProblem,
    x_new: &BlockPoint,
    y_old: &[f64],
    rho: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    if !(gamma >= 0.0) {
        return Err(invalid("gamma", format!("must be nonnegative, got {gamma}")));
    }
    let at = with_y(x_new, y_old);
    let f_lin = problem.grad_y(&at);
    ensure_finite(&f_lin, || "linear coupling term".into())?;
    if gamma == 0.0 {
        return prox_y(
            problem.y_regularizer(),
            problem.y_set(),
            rho,
            &add_scaled(y_old, rho, &f_lin),
        );
    }
    let denom = 1.0 / rho + gamma;
    let w: Vec<f64> = y_old
        .iter()
        .zip(&f_lin)
        .map(|(y, f)| (y / rho + f) / denom)
        .collect();
    prox_y(problem.y_regularizer(), problem.y_set(), 1.0 / denom, &w)
}

/// y-update under plain concavity: projected gradient ascent on
/// `f(x, u) - g(u) - |u - y_old|^2/(2 rho) - (gamma/2)|u|^2`.
pub fn y_update_concave(
    problem: &dyn MinMaxProblem,
    x_new: &BlockPoint,
    y_old: &[f64],
    rho: f64,
    gamma: f64,
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<Vec<f64>> {
    if !(gamma >= 0.0) {
        return Err(invalid("gamma", format!("must be nonnegative, got {gamma}")));
    }
    let step = 1.0 / (problem.constants().l_y + 1.0 / rho + gamma);
    let mut at = with_y(x_new, y_old);
    let mut residual = f64::INFINITY;
    for _ in 0..inner_max_iter {
        let grad_f = problem.grad_y(&at);
        ensure_finite(&grad_f, || "y gradient in inner loop".into())?;
        let ascent: Vec<f64> = grad_f
            .iter()
            .zip(&at.y)
            .zip(y_old)
            .map(|((gf, u), y)| gf - (u - y) / rho - gamma * u)
            .collect();
        let next = prox_y(
            problem.y_regularizer(),
            problem.y_set(),
            step,
            &add_scaled(&at.y, step, &ascent),
        )?;
        residual = dist(&next, &at.y) / step;
        at.y = next;
        if residual <= inner_tol {
            return Ok(at.y);
        }
    }
    Err(Error::InnerIterationCap {
        iterations: inner_max_iter,
        residual,
        last: at.y,
    })
}

fn with_y(x_part: &BlockPoint, y: &[f64]) -> BlockPoint {
    BlockPoint::new(x_part.x.clone(), y.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationLimit,
}

/// Loop state handed to observers after every iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub current: BlockPoint,
    pub previous: BlockPoint,
    pub iter: u64,
    pub trace: Vec<IterateTrace>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub point: BlockPoint,
    pub best_point: BlockPoint,
    pub best_gap: f64,
    pub trace: Vec<IterateTrace>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Runs HiBSA from the problem's default starting point.
pub fn hibsa_run_default(problem: &dyn MinMaxProblem, config: &SolverConfig) -> Result<RunReport> {
    let start = problem.default_start()?;
    hibsa_run(problem, config, &start)
}

pub fn hibsa_run(
    problem: &dyn MinMaxProblem,
    config: &SolverConfig,
    start: &BlockPoint,
) -> Result<RunReport> {
    hibsa_run_observed(problem, config, start, |_| {})
}

/// As [`hibsa_run`], calling `observer` after each iteration.
pub fn hibsa_run_observed(
    problem: &dyn MinMaxProblem,
    config: &SolverConfig,
    start: &BlockPoint,
    mut observer: impl FnMut(&SolverState),
) -> Result<RunReport> {
    config.validate()?;
    config.surrogate.validate(problem.num_blocks())?;
    problem.check_point(start)?;
    if !problem.is_feasible(start, 1e-9) {
        return Err(invalid("x0", "starting point is not feasible"));
    }
    let regime = problem.regime();
    regime.validate()?;
    let rule = StepRule::new(&config.schedule, regime, config.schedule_params(problem))?;
    let rho = config.rho;
    let l_y = problem.constants().l_y;

    let mut warnings = Vec::new();
    let mut warned_beta = None;
    let mut state = SolverState {
        current: start.clone(),
        previous: start.clone(),
        iter: 0,
        trace: Vec::with_capacity(config.max_iter.min(100_000) as usize),
        rng_seed: config.seed,
    };
    let mut best_point = start.clone();
    let mut best_gap = f64::INFINITY;
    let mut termination = Termination::IterationLimit;

    for r in 1..=config.max_iter {
        let beta = rule.beta(r)?;
        let gamma = rule.gamma(r)?;

        if let Regime::StronglyConcave { theta } = regime {
            if warned_beta != Some(beta) && !check_strongly_concave_conditions(rule.params(), theta, beta) {
                let msg = format!(
                    "step-size conditions for the strongly concave regime fail at r = {r} (rho = {rho}, beta = {beta})"
                );
                if config.enforce_conditions {
                    return Err(invalid("rho", msg));
                }
                log::warn!("{msg}");
                warnings.push(msg);
                warned_beta = Some(beta);
            }
        }

        let cur = &state.current;
        let mut next = cur.clone();
        for i in 0..problem.num_blocks() {
            next.x[i] = x_block_update(problem, i, &next, beta, &config.surrogate)?;
        }
        next.y = match regime {
            Regime::StronglyConcave { .. } => y_update_strongly_concave(problem, &next, &cur.y, rho)?,
            Regime::LinearCoupling => y_update_linear(problem, &next, &cur.y, rho, gamma)?,
            Regime::Concave => y_update_concave(
                problem,
                &next,
                &cur.y,
                rho,
                gamma,
                config.inner_tol,
                config.inner_max_iter,
            )?,
        };
        if !next.is_finite() {
            return Err(Error::NonFinite {
                context: format!("iterate {r}"),
            });
        }

        let gap_norm = stationarity_gap(problem, &next, beta, rho)?.norm();
        let gap_norm_fixed = stationarity_gap(problem, &next, 1.0, 1.0)?.norm();
        let potential = match regime {
            Regime::StronglyConcave { theta } => {
                potential_strongly_concave(problem, &next, cur, rho, theta, l_y)
            }
            _ => {
                let g_prev = if r == 1 { gamma } else { rule.gamma(r - 1)? };
                potential_concave(problem, &next, cur, rho, rule.gamma(r + 1)?, gamma, g_prev)
            }
        };
        let step_x_norm = next
            .x
            .iter()
            .zip(&cur.x)
            .map(|(a, b)| dist_sq(a, b))
            .sum::<f64>()
            .sqrt();
        let step_y_norm = dist(&next.y, &cur.y);

        state.trace.push(IterateTrace {
            iter: r,
            objective: problem.objective(&next),
            gap_norm,
            gap_norm_fixed,
            potential,
            step_x_norm,
            step_y_norm,
            gamma,
            beta,
        });
        state.previous = std::mem::replace(&mut state.current, next);
        state.iter = r;
        if gap_norm < best_gap {
            best_gap = gap_norm;
            best_point = state.current.clone();
        }
        observer(&state);
        if gap_norm <= config.epsilon {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(RunReport {
        point: state.current,
        best_point,
        best_gap,
        trace: state.trace,
        termination,
        warnings,
    })
}

/// Plain alternating gradient descent-ascent on `y^T A x`:
/// `x <- x - A^T y / eta`, then `y <- y + 2 lambda A x`.
///
/// Returns `|A x|^2 + |A^T y|^2` after every iteration; overflowed values are reported as `+inf`.
pub fn gda_run(
    a: &DMatrix<f64>,
    eta: f64,
    lambda: f64,
    iters: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<Vec<f64>> {
    if x0.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: x0.len(),
        });
    }
    if y0.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: y0.len(),
        });
    }
    if !(eta > 0.0) || !(lambda > 0.0) {
        return Err(invalid("eta", "eta and lambda must be positive"));
    }
    let mut x = DVector::from_column_slice(x0);
    let mut y = DVector::from_column_slice(y0);
    let mut gaps = Vec::with_capacity(iters);
    for _ in 0..iters {
        x -= a.tr_mul(&y) / eta;
        y += (a * &x) * (2.0 * lambda);
        let g = (a * &x).norm_squared() + a.tr_mul(&y).norm_squared();
        gaps.push(if g.is_finite() { g } else { f64::INFINITY });
    }
    Ok(gaps)
}

/// [`gda_run`] on a bilinear problem, recorded as trace rows.
///
/// Stationarity gaps use `beta = eta` and `rho = 2 lambda`, which makes `gap_norm^2` the
/// optimality gap on unconstrained domains. The potential column is NaN. Once the iterates
/// overflow one last row with infinite gaps is recorded and the run stops.
pub fn gda_trace(
    problem: &BilinearProblem,
    eta: f64,
    lambda: f64,
    iters: u64,
    start: &BlockPoint,
) -> Result<Vec<IterateTrace>> {
    if !matches!(problem.x_set(0), ConvexSet::FullSpace { .. }) {
        return Err(invalid(
            "domain",
            "gradient descent-ascent needs an unconstrained domain",
        ));
    }
    if !(eta > 0.0) || !(lambda > 0.0) {
        return Err(invalid("eta", "eta and lambda must be positive"));
    }
    problem.check_point(start)?;
    let a = problem.matrix();
    let mut x = DVector::from_column_slice(&start.x[0]);
    let mut y = DVector::from_column_slice(&start.y);
    let mut trace = Vec::new();
    for iter in 1..=iters {
        let x_old = x.clone();
        let y_old = y.clone();
        x -= a.tr_mul(&y) / eta;
        y += (a * &x) * (2.0 * lambda);
        let point = BlockPoint::new(vec![x.as_slice().to_vec()], y.as_slice().to_vec());
        if !point.is_finite() {
            trace.push(IterateTrace {
                iter,
                objective: f64::NAN,
                gap_norm: f64::INFINITY,
                gap_norm_fixed: f64::INFINITY,
                potential: f64::NAN,
                step_x_norm: f64::INFINITY,
                step_y_norm: f64::INFINITY,
                gamma: 0.0,
                beta: eta,
            });
            break;
        }
        let gap = |b: f64, r: f64| match stationarity_gap(problem, &point, b, r) {
            Ok(g) => g.norm(),
            Err(_) => f64::INFINITY,
        };
        trace.push(IterateTrace {
            iter,
            objective: problem.objective(&point),
            gap_norm: gap(eta, 2.0 * lambda),
            gap_norm_fixed: gap(1.0, 1.0),
            potential: f64::NAN,
            step_x_norm: (&x - &x_old).norm(),
            step_y_norm: (&y - &y_old).norm(),
            gamma: 0.0,
            beta: eta,
        });
    }
    Ok(trace)
}
