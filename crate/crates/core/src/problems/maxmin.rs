use super::channel::ChannelModel;
use crate::error::Result;
use crate::point::BlockPoint;
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::prox::ConvexSet;
use crate::schedule::Regime;

/// Max-min fair power control written as `min_x max_{y in simplex} -sum_k y_k R_k(x)`.
///
/// Jammer gains in the model are ignored.
#[derive(Debug, Clone)]
pub struct MaxMinProblem {
    model: ChannelModel,
    x_set: ConvexSet,
    y_set: ConvexSet,
    constants: ProblemConstants,
}

impl MaxMinProblem {
    pub fn new(model: ChannelModel) -> Result<Self> {
        model.validate()?;
        let x_set = ConvexSet::BudgetSimplex {
            dim: model.channels(),
            budget: model.user_budget,
        };
        let y_set = ConvexSet::simplex(model.users());
        let (l_x, l_y) = model.maxmin_lipschitz();
        Ok(MaxMinProblem {
            model,
            x_set,
            y_set,
            constants: ProblemConstants { l_x, l_y },
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn rates(&self, x: &[Vec<f64>]) -> Vec<f64> {
        self.model.rates(x, None)
    }

    pub fn min_rate(&self, x: &[Vec<f64>]) -> f64 {
        self.rates(x).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Gradient of `sum_k y_k R_k` with respect to every user block.
    pub fn weighted_rate_grads(&self, x: &[Vec<f64>], y: &[f64]) -> Vec<Vec<f64>> {
        (0..self.model.users())
            .map(|i| self.model.weighted_rate_grad(x, None, y, i))
            .collect()
    }

    pub fn x_sets(&self) -> Vec<ConvexSet> {
        vec![self.x_set.clone(); self.model.users()]
    }
}

impl MinMaxProblem for MaxMinProblem {
    fn name(&self) -> &str {
        "maxmin"
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.model.channels(); self.model.users()]
    }

    fn y_dim(&self) -> usize {
        self.model.users()
    }

    fn regime(&self) -> Regime {
        Regime::LinearCoupling
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn f(&self, point: &BlockPoint) -> f64 {
        -self
            .rates(&point.x)
            .iter()
            .zip(&point.y)
            .map(|(r, y)| r * y)
            .sum::<f64>()
    }

    fn grad_x(&self, point: &BlockPoint, block: usize) -> Vec<f64> {
        self.model
            .weighted_rate_grad(&point.x, None, &point.y, block)
            .into_iter()
            .map(|g| -g)
            .collect()
    }

    fn grad_y(&self, point: &BlockPoint) -> Vec<f64> {
        self.rates(&point.x).into_iter().map(|r| -r).collect()
    }

    fn x_set(&self, _block: usize) -> &ConvexSet {
        &self.x_set
    }

    fn y_set(&self) -> &ConvexSet {
        &self.y_set
    }
}
