use super::channel::ChannelModel;
use crate::error::{invalid, Result};
use crate::linalg::{dist, dot};
use crate::prox::{project, ConvexSet};

/// Smooth max-min power control: maximize `-(1/nu) log2 sum_k 2^{-nu R_k(x)}`.
#[derive(Debug, Clone)]
pub struct LseBaseline {
    model: ChannelModel,
    nu: f64,
    x_set: ConvexSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LseSolution {
    pub x: Vec<Vec<f64>>,
    pub surrogate: f64,
    pub min_rate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `-(1/nu) log2 sum_i 2^{-nu r_i}`, shifted by the smallest rate to avoid overflow.
pub fn lse_min(rates: &[f64], nu: f64) -> f64 {
    let m = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = rates.iter().map(|r| (-nu * (r - m)).exp2()).sum();
    m - s.log2() / nu
}

/// Softmin weights `2^{-nu r_i} / sum_j 2^{-nu r_j}`, the gradient of [`lse_min`] in `r`.
fn lse_weights(rates: &[f64], nu: f64) -> Vec<f64> {
    let m = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = rates.iter().map(|r| (-nu * (r - m)).exp2()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

impl LseBaseline {
    pub fn new(model: ChannelModel, nu: f64) -> Result<Self> {
        model.validate()?;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid("nu", format!("must be positive, got {nu}")));
        }
        let x_set = ConvexSet::BudgetSimplex {
            dim: model.channels(),
            budget: model.user_budget,
        };
        Ok(LseBaseline { model, nu, x_set })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn surrogate(&self, x: &[Vec<f64>]) -> f64 {
        lse_min(&self.model.rates(x, None), self.nu)
    }

    pub fn gradient(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let w = lse_weights(&self.model.rates(x, None), self.nu);
        (0..self.model.users())
            .map(|i| self.model.weighted_rate_grad(x, None, &w, i))
            .collect()
    }

    /// Uniform allocation of the full budget.
    pub fn default_start(&self) -> Vec<Vec<f64>> {
        let n = self.model.channels();
        vec![vec![self.model.user_budget / n as f64; n]; self.model.users()]
    }

    fn project_all(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|xi| project(&self.x_set, xi)).collect()
    }

    /// Projected gradient ascent with Armijo backtracking; stops when the projected
    /// gradient step of unit length moves `x` by at most `tol`.
    pub fn solve(&self, x0: &[Vec<f64>], max_iter: usize, tol: f64) -> Result<LseSolution> {
        let mut x = self.project_all(x0)?;
        let mut value = self.surrogate(&x);
        let mut step = 1.0;
        let mut converged = false;
        let mut iterations = 0;
        for it in 0..max_iter {
            iterations = it + 1;
            let g = self.gradient(&x);
            let probe: Vec<Vec<f64>> = x
                .iter()
                .zip(&g)
                .map(|(xi, gi)| xi.iter().zip(gi).map(|(a, b)| a + b).collect())
                .collect();
            let mapped = self.project_all(&probe)?;
            let residual: f64 = x
                .iter()
                .zip(&mapped)
                .map(|(a, b)| dist(a, b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= tol {
                converged = true;
                break;
            }
            step *= 2.0;
            loop {
                let trial: Vec<Vec<f64>> = x
                    .iter()
                    .zip(&g)
                    .map(|(xi, gi)| xi.iter().zip(gi).map(|(a, b)| a + step * b).collect())
                    .collect();
                let trial = self.project_all(&trial)?;
                let gain: f64 = g
                    .iter()
                    .zip(trial.iter().zip(&x))
                    .map(|(gi, (t, xi))| dot(gi, &crate::linalg::sub(t, xi)))
                    .sum();
                let trial_value = self.surrogate(&trial);
                if trial_value >= value + 1e-4 * gain || step < 1e-14 {
                    x = trial;
                    value = trial_value;
                    break;
                }
                step *= 0.5;
            }
        }
        let min_rate = self
            .model
            .rates(&x, None)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok(LseSolution {
            x,
            surrogate: value,
            min_rate,
            iterations,
            converged,
        })
    }
}
