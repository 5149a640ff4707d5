use crate::error::{Error, Result};
use crate::point::BlockPoint;
use crate::prox::{project, ConvexSet, XRegularizer, YRegularizer};
use crate::schedule::Regime;

/// Lipschitz constants declared by a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// `L_{x_i}`: Lipschitz constant of `grad_{x_i} f` with respect to `x`.
    pub l_x: Vec<f64>,
    /// `L_y`: Lipschitz constant of `grad_y f` with respect to `(x, y)`.
    pub l_y: f64,
}

static ZERO_X: XRegularizer = XRegularizer::Zero;
static ZERO_Y: YRegularizer = YRegularizer::Zero;

/// A block-wise min-max problem
///
/// ```text
/// min_{x_i in X_i} max_{y in Y}  f(x_1, ..., x_K, y) + sum_i h_i(x_i) - g(y)
/// ```
///
/// Implementations must be side-effect free so independent runs can share an instance.
pub trait MinMaxProblem: Send + Sync {
    fn name(&self) -> &str;
    fn block_dims(&self) -> Vec<usize>;
    fn y_dim(&self) -> usize;
    fn regime(&self) -> Regime;
    fn constants(&self) -> &ProblemConstants;

    /// The smooth coupling `f(x, y)`.
    fn f(&self, point: &BlockPoint) -> f64;
    fn grad_x(&self, point: &BlockPoint, block: usize) -> Vec<f64>;
    fn grad_y(&self, point: &BlockPoint) -> Vec<f64>;

    fn x_set(&self, block: usize) -> &ConvexSet;
    fn y_set(&self) -> &ConvexSet;

    fn x_regularizer(&self, _block: usize) -> &XRegularizer {
        &ZERO_X
    }

    fn y_regularizer(&self) -> &YRegularizer {
        &ZERO_Y
    }

    fn num_blocks(&self) -> usize {
        self.block_dims().len()
    }

    /// `l(x, y) = f(x, y) + sum_i h_i(x_i) - g(y)`.
    fn objective(&self, point: &BlockPoint) -> f64 {
        let h: f64 = point
            .x
            .iter()
            .enumerate()
            .map(|(i, xi)| self.x_regularizer(i).value(xi))
            .sum();
        self.f(point) + h - self.y_regularizer().value(&point.y)
    }

    /// Projection of the origin onto each `X_i`, and the center of `Y`.
    fn default_start(&self) -> Result<BlockPoint> {
        let x = self
            .block_dims()
            .iter()
            .enumerate()
            .map(|(i, &n)| project(self.x_set(i), &vec![0.0; n]))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockPoint::new(x, self.y_set().center()))
    }

    fn check_point(&self, point: &BlockPoint) -> Result<()> {
        point.validate(&self.block_dims(), self.y_dim())
    }

    fn is_feasible(&self, point: &BlockPoint, tol: f64) -> bool {
        point
            .x
            .iter()
            .enumerate()
            .all(|(i, xi)| self.x_set(i).contains(xi, tol))
            && self.y_set().contains(&point.y, tol)
    }
}

pub(crate) fn check_block(problem: &dyn MinMaxProblem, block: usize) -> Result<()> {
    let k = problem.num_blocks();
    if block >= k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: block + 1,
        });
    }
    Ok(())
}
