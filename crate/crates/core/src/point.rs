use crate::error::{Error, Result};
use crate::linalg;

/// An iterate of the min-max problem: `K` minimization blocks and one maximization block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl BlockPoint {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        BlockPoint { x, y }
    }

    /// All-zero point with the given block layout.
    pub fn zeros(block_dims: &[usize], y_dim: usize) -> Self {
        BlockPoint {
            x: block_dims.iter().map(|&n| vec![0.0; n]).collect(),
            y: vec![0.0; y_dim],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.x.len()
    }

    /// Checks the block layout against a problem's declared dimensions and that every entry is finite.
    pub fn validate(&self, block_dims: &[usize], y_dim: usize) -> Result<()> {
        if self.x.len() != block_dims.len() {
            return Err(Error::DimensionMismatch {
                expected: block_dims.len(),
                got: self.x.len(),
            });
        }
        for (block, &n) in self.x.iter().zip(block_dims) {
            if block.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: block.len(),
                });
            }
        }
        if self.y.len() != y_dim {
            return Err(Error::DimensionMismatch {
                expected: y_dim,
                got: self.y.len(),
            });
        }
        if !self.is_finite() {
            return Err(Error::NonFinite {
                context: "block point".into(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().flatten().chain(&self.y).all(|v| v.is_finite())
    }

    /// Stacked `x = [x_1; ...; x_K]`.
    pub fn x_flat(&self) -> Vec<f64> {
        self.x.iter().flatten().copied().collect()
    }

    /// `||x - other.x||` over all blocks.
    pub fn x_distance(&self, other: &BlockPoint) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| linalg::dist_sq(a, b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn y_distance(&self, other: &BlockPoint) -> f64 {
        linalg::dist(&self.y, &other.y)
    }
}
