//! Regime taxonomy and the `beta^r` / `gamma^r` parameter schedules.
//!
//! Every schedule is a pure function of the iteration counter `r >= 1`, so a run can be
//! replayed from its configuration alone.

use crate::error::{invalid, Result};

/// How the coupling `f(x, .)` behaves in the maximization variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `f(x, .)` is `theta`-strongly concave over `Y`.
    StronglyConcave { theta: f64 },
    /// `f(x, .)` is concave but not strongly so.
    Concave,
    /// `f(x, y) = <y, F(x)>` (plus terms independent of `y`).
    LinearCoupling,
}

impl Regime {
    pub fn validate(&self) -> Result<()> {
        if let Regime::StronglyConcave { theta } = *self {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(invalid("theta", format!("must be positive, got {theta}")));
            }
            if theta <= 1.0 {
                log::warn!("strong concavity modulus theta = {theta} is not above 1");
            }
        }
        Ok(())
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Regime::StronglyConcave { theta } => Some(theta),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::StronglyConcave { .. } => "strongly-concave",
            Regime::Concave => "concave",
            Regime::LinearCoupling => "linear",
        }
    }
}

/// Constants entering the step-size rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    /// Proximal parameter of the `y` surrogate.
    pub rho: f64,
    /// Growth factor of the `beta^r` rule, must exceed 2.
    pub kappa: f64,
    /// Surrogate strong-convexity moduli `mu_i`, one per block.
    pub mu: Vec<f64>,
    pub l_y: f64,
    pub l_x: Vec<f64>,
    pub l_u: Vec<f64>,
    /// Lower bound applied to `beta^r`; must exceed `max_i L_{x_i}`.
    pub beta_min: f64,
}

impl ScheduleParams {
    /// Builds the parameter set with the default floor `beta_min = 1.01 * max_i L_{x_i}`.
    pub fn new(rho: f64, kappa: f64, mu: Vec<f64>, l_y: f64, l_x: Vec<f64>, l_u: Vec<f64>) -> Self {
        let beta_min = 1.01 * l_x.iter().copied().fold(0.0, f64::max);
        ScheduleParams {
            rho,
            kappa,
            mu,
            l_y,
            l_x,
            l_u,
            beta_min,
        }
    }

    pub fn with_beta_min(mut self, beta_min: f64) -> Self {
        self.beta_min = beta_min;
        self
    }

    pub fn mu_min(&self) -> f64 {
        let m = self.mu.iter().copied().fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m
        } else {
            0.0
        }
    }

    pub fn max_l_x(&self) -> f64 {
        self.l_x.iter().copied().fold(0.0, f64::max)
    }

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
        let lipschitz = std::iter::once(&self.l_y).chain(&self.l_x).chain(&self.l_u);
        if lipschitz.into_iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("lipschitz", "constants must be finite and nonnegative"));
        }
        if self.mu.iter().any(|m| !(*m >= 0.0)) {
            return Err(invalid("mu", "moduli must be nonnegative"));
        }
        Ok(())
    }
}

/// `gamma^r = 1 / (rho * r^{1/4})`.
pub fn gamma_schedule(r: u64, rho: f64) -> Result<f64> {
    if r == 0 {
        return Err(invalid("r", "iteration counter starts at 1"));
    }
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    Ok(1.0 / (rho * (r as f64).powf(0.25)))
}

/// `beta^r = rho L_y^2 + 2 kappa L_y^2 / (rho (gamma^r)^2) - 2 mu_min`, floored at `beta_min`.
pub fn beta_schedule(r: u64, params: &ScheduleParams) -> Result<f64> {
    let gamma = gamma_schedule(r, params.rho)?;
    beta_from_gamma(gamma, params)
}

pub(crate) fn beta_from_gamma(gamma: f64, params: &ScheduleParams) -> Result<f64> {
    if !(params.kappa > 2.0) {
        return Err(invalid(
            "kappa",
            format!("kappa must exceed 2, got {}", params.kappa),
        ));
    }
    let max_lx = params.max_l_x();
    let floor_disabled = params.beta_min == 0.0 && max_lx == 0.0;
    if !floor_disabled && params.beta_min <= max_lx {
        return Err(invalid(
            "beta_min",
            format!("floor {} must exceed max L_x = {max_lx}", params.beta_min),
        ));
    }
    let (rho, ly2) = (params.rho, params.l_y * params.l_y);
    let raw = rho * ly2 + 2.0 * params.kappa * ly2 / (rho * gamma * gamma) - 2.0 * params.mu_min();
    let beta = raw.max(params.beta_min);
    if !(beta > 0.0) {
        return Err(invalid(
            "beta_min",
            format!("beta^r = {beta} is not positive; raise the floor"),
        ));
    }
    Ok(beta)
}

/// Smallest `beta` that satisfies the strongly concave step-size rule for every block,
/// i.e. `max_i L_y^2 (2/(theta^2 rho) + rho/2) + L_{x_i}/2 - mu_i`.
pub fn strongly_concave_beta_threshold(params: &ScheduleParams, theta: f64) -> f64 {
    let ly2 = params.l_y * params.l_y;
    let base = ly2 * (2.0 / (theta * theta * params.rho) + params.rho / 2.0);
    params
        .l_x
        .iter()
        .zip(&params.mu)
        .map(|(lx, mu)| base + lx / 2.0 - mu)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest admissible `rho` under strong concavity, `theta / (4 L_y^2)` (infinite when `L_y = 0`).
pub fn max_strongly_concave_rho(theta: f64, l_y: f64) -> f64 {
    if l_y == 0.0 {
        f64::INFINITY
    } else {
        theta / (4.0 * l_y * l_y)
    }
}

/// Whether `(rho, beta)` satisfy `rho < theta / (4 L_y^2)` and the per-block `beta` lower bound.
pub fn check_strongly_concave_conditions(params: &ScheduleParams, theta: f64, beta: f64) -> bool {
    let ly2 = params.l_y * params.l_y;
    let rho_ok = ly2 == 0.0 || params.rho < theta / (4.0 * ly2);
    rho_ok && beta > strongly_concave_beta_threshold(params, theta)
}

/// Named step-size schedules.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// Constant `beta` and `gamma`. The strongly concave regime always runs with `gamma = 0`.
    Constant { beta: f64, gamma: f64 },
    /// `gamma^r = 1/(rho r^{1/4})` with the `kappa` rule for `beta^r`.
    Diminishing,
    /// `gamma^r = 1/sqrt(r)`, `beta^r = r`.
    Fig1,
    /// Regime default: in the strongly concave regime a constant `beta` just above the
    /// step-size threshold (resolved by the solver), otherwise [`Schedule::Diminishing`].
    Auto,
}

impl Schedule {
    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::Diminishing => "diminishing",
            Schedule::Fig1 => "fig1",
            Schedule::Auto => "auto",
        }
    }

    pub fn gamma(&self, r: u64, rho: f64) -> Result<f64> {
        if r == 0 {
            return Err(invalid("r", "iteration counter starts at 1"));
        }
        match *self {
            Schedule::Constant { gamma, .. } => Ok(gamma),
            Schedule::Diminishing | Schedule::Auto => gamma_schedule(r, rho),
            Schedule::Fig1 => Ok(1.0 / (r as f64).sqrt()),
        }
    }

    pub fn beta(&self, r: u64, params: &ScheduleParams) -> Result<f64> {
        if r == 0 {
            return Err(invalid("r", "iteration counter starts at 1"));
        }
        match *self {
            Schedule::Constant { beta, .. } => Ok(beta),
            Schedule::Diminishing | Schedule::Auto => beta_schedule(r, params),
            Schedule::Fig1 => Ok(r as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Schedule::Constant { beta, gamma } = *self {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(invalid("beta", format!("must be positive, got {beta}")));
            }
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return Err(invalid("gamma", format!("must be nonnegative, got {gamma}")));
            }
        }
        Ok(())
    }
}
