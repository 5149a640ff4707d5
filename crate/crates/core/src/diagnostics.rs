//! Stationarity gap, potential functions, gradient checks and rate fits.

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{dist_sq, norm_sq, sub};
use crate::point::BlockPoint;
use crate::problem::MinMaxProblem;
use crate::prox::{project, prox_x, prox_y, ConvexSet};
use crate::trace::IterateTrace;

/// The `(K+1)`-block stationarity gap at a point, with the parameters used to compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub x_parts: Vec<Vec<f64>>,
    pub y_part: Vec<f64>,
    pub beta: f64,
    pub rho: f64,
}

impl GapVector {
    pub fn norm(&self) -> f64 {
        let xs: f64 = self.x_parts.iter().map(|v| norm_sq(v)).sum();
        (xs + norm_sq(&self.y_part)).sqrt()
    }

    pub fn block_norms(&self) -> Vec<f64> {
        self.x_parts
            .iter()
            .chain(std::iter::once(&self.y_part))
            .map(|v| norm_sq(v).sqrt())
            .collect()
    }
}

/// x-part `i`: `beta (x_i - Px_i(x_i - grad_i / beta))`;
/// y-part: `(y - Py(y + rho grad_y)) / rho`.
pub fn stationarity_gap(
    problem: &dyn MinMaxProblem,
    point: &BlockPoint,
    beta: f64,
    rho: f64,
) -> Result<GapVector> {
    problem.check_point(point)?;
    let mut x_parts = Vec::with_capacity(point.x.len());
    for (i, xi) in point.x.iter().enumerate() {
        let grad = problem.grad_x(point, i);
        ensure_finite(&grad, || format!("gradient of block {i}"))?;
        let v: Vec<f64> = xi.iter().zip(&grad).map(|(x, g)| x - g / beta).collect();
        let p = prox_x(problem.x_regularizer(i), problem.x_set(i), beta, &v)?;
        x_parts.push(xi.iter().zip(&p).map(|(x, p)| beta * (x - p)).collect());
    }
    let grad = problem.grad_y(point);
    ensure_finite(&grad, || "y gradient".into())?;
    let w: Vec<f64> = point.y.iter().zip(&grad).map(|(y, g)| y + rho * g).collect();
    let p = prox_y(problem.y_regularizer(), problem.y_set(), rho, &w)?;
    let y_part = point.y.iter().zip(&p).map(|(y, p)| (y - p) / rho).collect();
    Ok(GapVector {
        x_parts,
        y_part,
        beta,
        rho,
    })
}

/// `l(x^{r+1}, y^{r+1}) + (2/(rho^2 theta) + 1/(2 rho) - 4 (1/rho - L_y^2/(2 theta^2))) |y^{r+1} - y^r|^2`.
pub fn potential_strongly_concave(
    problem: &dyn MinMaxProblem,
    next: &BlockPoint,
    prev: &BlockPoint,
    rho: f64,
    theta: f64,
    l_y: f64,
) -> f64 {
    let coeff =
        2.0 / (rho * rho * theta) + 1.0 / (2.0 * rho) - 4.0 * (1.0 / rho - l_y * l_y / (2.0 * theta * theta));
    problem.objective(next) + coeff * dist_sq(&next.y, &prev.y)
}

/// Potential of the concave and linear regimes, with `gamma_next = gamma^{r+1}`,
/// `gamma = gamma^r` and `gamma_prev = gamma^{r-1}`.
pub fn potential_concave(
    problem: &dyn MinMaxProblem,
    next: &BlockPoint,
    prev: &BlockPoint,
    rho: f64,
    gamma_next: f64,
    gamma: f64,
    gamma_prev: f64,
) -> f64 {
    let dy = dist_sq(&next.y, &prev.y);
    let y2 = norm_sq(&next.y);
    let coeff = 1.0 / (2.0 * rho)
        + 2.0 / (rho * rho * gamma)
        + (2.0 / rho) * (1.0 / (rho * gamma_next) - 1.0 / (rho * gamma));
    coeff * dy + problem.objective(next) - gamma / 2.0 * y2 - (2.0 / rho) * (gamma_prev / gamma - 1.0) * y2
}

/// Largest relative error between analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// One entry per x block, then one for `y`.
    pub per_block: Vec<f64>,
}

impl GradientCheck {
    pub fn max_error(&self) -> f64 {
        self.per_block.iter().copied().fold(0.0, f64::max)
    }
}

/// `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

pub fn finite_difference_check(
    problem: &dyn MinMaxProblem,
    point: &BlockPoint,
    h: f64,
) -> Result<GradientCheck> {
    problem.check_point(point)?;
    if !(1e-7..=1e-4).contains(&h) {
        return Err(crate::error::invalid(
            "h_step",
            format!("must lie in [1e-7, 1e-4], got {h}"),
        ));
    }
    let mut per_block = Vec::with_capacity(point.x.len() + 1);
    let mut probe = point.clone();
    for i in 0..point.x.len() {
        let grad = problem.grad_x(point, i);
        let mut worst: f64 = 0.0;
        for j in 0..point.x[i].len() {
            let orig = probe.x[i][j];
            probe.x[i][j] = orig + h;
            let fp = problem.f(&probe);
            probe.x[i][j] = orig - h;
            let fm = problem.f(&probe);
            probe.x[i][j] = orig;
            worst = worst.max(relative_error(grad[j], (fp - fm) / (2.0 * h)));
        }
        per_block.push(worst);
    }
    let grad = problem.grad_y(point);
    let mut worst: f64 = 0.0;
    for j in 0..point.y.len() {
        let orig = probe.y[j];
        probe.y[j] = orig + h;
        let fp = problem.f(&probe);
        probe.y[j] = orig - h;
        let fm = problem.f(&probe);
        probe.y[j] = orig;
        worst = worst.max(relative_error(grad[j], (fp - fm) / (2.0 * h)));
    }
    per_block.push(worst);
    Ok(GradientCheck { per_block })
}

/// Least-squares fit of `log(min_{r <= T} gap_r^2)` against `log T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// The running minimum hit zero before any usable point.
    pub already_converged: bool,
}

pub fn fit_rate(trace: &[IterateTrace], burn_in: usize) -> Result<RateFit> {
    if trace.len() <= burn_in + 10 {
        return Err(Error::Degenerate(format!(
            "trace of length {} is too short for burn-in {burn_in}",
            trace.len()
        )));
    }
    let mut running = f64::INFINITY;
    let mut pts = Vec::new();
    for (k, t) in trace.iter().enumerate() {
        running = running.min(t.gap_norm * t.gap_norm);
        if k >= burn_in && running > 0.0 && t.iter > 0 {
            pts.push(((t.iter as f64).ln(), running.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(RateFit {
            slope: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
            already_converged: true,
        });
    }
    if pts.iter().all(|p| p.1 == pts[0].1) {
        return Ok(RateFit {
            slope: 0.0,
            intercept: pts[0].1,
            r_squared: 1.0,
            already_converged: false,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        already_converged: false,
    })
}

/// KKT residual of the epigraph form of max-min fairness at `(x*, y*)` with
/// `lambda* = min_i R_i(x*)`.
///
/// `grad_weighted[i]` is the gradient of `sum_k y*_k R_k` with respect to block `i` at `x*`.
/// Returns the largest of the complementary-slackness residual, the violation of
/// `R_i >= lambda*` and the projection fixed-point residual over the `X_i`.
pub fn maxmin_kkt_residual(
    rates: &[f64],
    y_star: &[f64],
    x_star: &[Vec<f64>],
    grad_weighted: &[Vec<f64>],
    x_sets: &[ConvexSet],
) -> Result<f64> {
    if rates.len() != y_star.len() {
        return Err(Error::DimensionMismatch {
            expected: rates.len(),
            got: y_star.len(),
        });
    }
    if x_star.len() != grad_weighted.len() || x_star.len() != x_sets.len() {
        return Err(Error::DimensionMismatch {
            expected: x_star.len(),
            got: grad_weighted.len().min(x_sets.len()),
        });
    }
    if !ConvexSet::simplex(y_star.len()).contains(y_star, 1e-8) {
        return Err(Error::OffSimplex("y*".into()));
    }
    let lambda = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = rates
        .iter()
        .zip(y_star)
        .map(|(r, y)| (y * (lambda - r)).abs())
        .fold(0.0, f64::max);
    let primal = rates.iter().map(|r| (lambda - r).max(0.0)).fold(0.0, f64::max);
    let mut vi = 0.0;
    for ((x, g), set) in x_star.iter().zip(grad_weighted).zip(x_sets) {
        let moved: Vec<f64> = x.iter().zip(g).map(|(x, g)| x + g).collect();
        vi += norm_sq(&sub(x, &project(set, &moved)?));
    }
    Ok(slack.max(primal).max(vi.sqrt()))
}
