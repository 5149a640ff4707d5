use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::point::BlockPoint;
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::prox::ConvexSet;
use crate::schedule::Regime;

/// Number of random feasible points used to estimate the strong concavity modulus.
pub const THETA_SAMPLES: usize = 1000;
const THETA_SEED: u64 = 0x7e7a;

/// Users minimize their negative sum-rate while a jammer spreads noise power across channels.
#[derive(Debug, Clone)]
pub struct JammingProblem {
    model: ChannelModel,
    x_set: ConvexSet,
    y_set: ConvexSet,
    theta: f64,
    constants: ProblemConstants,
}

impl JammingProblem {
    pub fn new(model: ChannelModel) -> Result<Self> {
        model.validate()?;
        let n = model.channels();
        let x_set = ConvexSet::BudgetSimplex {
            dim: n,
            budget: model.user_budget,
        };
        let y_set = ConvexSet::BudgetSimplex {
            dim: n,
            budget: model.jammer_budget,
        };
        let (l_x, l_y) = model.sum_rate_lipschitz();
        let mut problem = JammingProblem {
            model,
            x_set,
            y_set,
            theta: 0.0,
            constants: ProblemConstants { l_x, l_y },
        };
        let theta = 0.9 * problem.min_curvature_sample(THETA_SAMPLES, THETA_SEED);
        if !(theta > 0.0) {
            return Err(Error::Degenerate(format!(
                "jammer objective is not strongly concave on the sampled points (theta = {theta})"
            )));
        }
        problem.theta = theta;
        Ok(problem)
    }

    /// The same users facing a jammer held at `power`; the maximization set collapses to
    /// that single point.
    pub fn with_frozen_jammer(model: ChannelModel, power: Vec<f64>) -> Result<Self> {
        let mut problem = Self::new(model)?;
        if power.len() != problem.y_dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.y_dim(),
                got: power.len(),
            });
        }
        if !problem.y_set.contains(&power, 1e-9) {
            return Err(crate::error::invalid(
                "power",
                "frozen jammer power must be feasible",
            ));
        }
        problem.y_set = ConvexSet::Box {
            lower: power.clone(),
            upper: power,
        };
        Ok(problem)
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sum_rate(&self, point: &BlockPoint) -> f64 {
        self.model.rates(&point.x, Some(&point.y)).iter().sum()
    }

    /// Diagonal of `-d^2 f / dy^2`; the Hessian in `y` is diagonal because each jammer
    /// power only enters its own channel.
    pub fn y_curvature(&self, point: &BlockPoint) -> Vec<f64> {
        let m = &self.model;
        (0..m.channels())
            .map(|n| {
                (0..m.users())
                    .map(|k| {
                        let (d, t) = m.powers(&point.x, Some(&point.y), n, k);
                        let a0 = m.jammer_gains[n][k];
                        a0 * a0 * (1.0 / (d * d) - 1.0 / (t * t))
                    })
                    .sum()
            })
            .collect()
    }

    /// Smallest curvature over `samples` points drawn uniformly from the feasible set.
    pub fn min_curvature_sample(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, n) = (self.model.users(), self.model.channels());
        let mut lowest = f64::INFINITY;
        for _ in 0..samples {
            let x = (0..k)
                .map(|_| uniform_budget_point(&mut rng, n, self.model.user_budget))
                .collect();
            let y = uniform_budget_point(&mut rng, n, self.model.jammer_budget);
            let p = BlockPoint::new(x, y);
            lowest = self.y_curvature(&p).into_iter().fold(lowest, f64::min);
        }
        lowest
    }
}

/// Uniform sample from `{v >= 0, sum v <= budget}`: the first `n` coordinates of a flat
/// Dirichlet draw in dimension `n + 1`.
pub(crate) fn uniform_budget_point(rng: &mut ChaCha8Rng, n: usize, budget: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..=n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e[..n].iter().map(|v| budget * v / total).collect()
}

impl MinMaxProblem for JammingProblem {
    fn name(&self) -> &str {
        "jamming"
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.model.channels(); self.model.users()]
    }

    fn y_dim(&self) -> usize {
        self.model.channels()
    }

    fn regime(&self) -> Regime {
        Regime::StronglyConcave { theta: self.theta }
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn f(&self, point: &BlockPoint) -> f64 {
        -self.sum_rate(point)
    }

    fn grad_x(&self, point: &BlockPoint, block: usize) -> Vec<f64> {
        let ones = vec![1.0; self.model.users()];
        self.model
            .weighted_rate_grad(&point.x, Some(&point.y), &ones, block)
            .into_iter()
            .map(|g| -g)
            .collect()
    }

    fn grad_y(&self, point: &BlockPoint) -> Vec<f64> {
        self.model
            .sum_rate_grad_jammer(&point.x, &point.y)
            .into_iter()
            .map(|g| -g)
            .collect()
    }

    fn x_set(&self, _block: usize) -> &ConvexSet {
        &self.x_set
    }

    fn y_set(&self) -> &ConvexSet {
        &self.y_set
    }
}
