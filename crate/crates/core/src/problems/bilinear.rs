use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::spectral_norm;
use crate::point::BlockPoint;
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::prox::ConvexSet;
use crate::schedule::Regime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BilinearDomain {
    Unconstrained,
    /// Both players restricted to the ball of this radius around the origin.
    Ball(f64),
}

/// `min_x max_y y^T A x`.
#[derive(Debug, Clone)]
pub struct BilinearProblem {
    a: DMatrix<f64>,
    x_set: ConvexSet,
    y_set: ConvexSet,
    constants: ProblemConstants,
}

impl BilinearProblem {
    pub fn new(a: DMatrix<f64>, domain: BilinearDomain) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("A", "entries must be finite"));
        }
        let (m, n) = a.shape();
        let (x_set, y_set) = match domain {
            BilinearDomain::Unconstrained => {
                (ConvexSet::FullSpace { dim: n }, ConvexSet::FullSpace { dim: m })
            }
            BilinearDomain::Ball(radius) => (
                ConvexSet::Ball {
                    center: vec![0.0; n],
                    radius,
                },
                ConvexSet::Ball {
                    center: vec![0.0; m],
                    radius,
                },
            ),
        };
        x_set.validate()?;
        let constants = ProblemConstants {
            l_x: vec![0.0],
            l_y: spectral_norm(&a),
        };
        Ok(BilinearProblem {
            a,
            x_set,
            y_set,
            constants,
        })
    }

    /// `rows x cols` matrix with independent standard normal entries.
    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    /// A random starting point drawn from a standard normal. The origin is stationary, so
    /// runs meant to show dynamics must start elsewhere.
    pub fn random_start(&self, seed: u64) -> BlockPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = self.a.shape();
        let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let x = draw(n);
        let y = draw(m);
        BlockPoint::new(vec![x], y)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `|A x|^2 + |A^T y|^2`.
    pub fn optimality_gap(&self, point: &BlockPoint) -> f64 {
        let x = DVector::from_column_slice(&point.x[0]);
        let y = DVector::from_column_slice(&point.y);
        (&self.a * x).norm_squared() + self.a.tr_mul(&y).norm_squared()
    }
}

impl MinMaxProblem for BilinearProblem {
    fn name(&self) -> &str {
        "bilinear"
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.a.ncols()]
    }

    fn y_dim(&self) -> usize {
        self.a.nrows()
    }

    fn regime(&self) -> Regime {
        Regime::LinearCoupling
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn f(&self, point: &BlockPoint) -> f64 {
        let x = DVector::from_column_slice(&point.x[0]);
        let y = DVector::from_column_slice(&point.y);
        y.dot(&(&self.a * x))
    }

    fn grad_x(&self, point: &BlockPoint, _block: usize) -> Vec<f64> {
        let y = DVector::from_column_slice(&point.y);
        self.a.tr_mul(&y).as_slice().to_vec()
    }

    fn grad_y(&self, point: &BlockPoint) -> Vec<f64> {
        let x = DVector::from_column_slice(&point.x[0]);
        (&self.a * x).as_slice().to_vec()
    }

    fn x_set(&self, _block: usize) -> &ConvexSet {
        &self.x_set
    }

    fn y_set(&self) -> &ConvexSet {
        &self.y_set
    }
}
