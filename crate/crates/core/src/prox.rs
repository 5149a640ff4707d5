//! Euclidean projections and the closed-form proximity operators used by the block updates.

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Feasible set of one variable block.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    FullSpace {
        dim: usize,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{v >= 0, sum(v) = scale}`
    Simplex {
        dim: usize,
        scale: f64,
    },
    /// `{v >= 0, sum(v) <= budget}`: one power-budget row.
    BudgetSimplex {
        dim: usize,
        budget: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl ConvexSet {
    pub fn simplex(dim: usize) -> Self {
        ConvexSet::Simplex { dim, scale: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::FullSpace { dim }
            | ConvexSet::Simplex { dim, .. }
            | ConvexSet::BudgetSimplex { dim, .. } => *dim,
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::FullSpace { .. } => Ok(()),
            ConvexSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(invalid("box", "lower bound exceeds upper bound"));
                }
                Ok(())
            }
            ConvexSet::Simplex { scale, .. } if !(*scale > 0.0) => {
                Err(invalid("scale", format!("must be positive, got {scale}")))
            }
            ConvexSet::BudgetSimplex { budget, .. } if !(*budget > 0.0) => {
                Err(invalid("budget", format!("must be positive, got {budget}")))
            }
            ConvexSet::Ball { radius, .. } if !(*radius >= 0.0) => {
                Err(invalid("radius", format!("must be nonnegative, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::FullSpace { .. } => v.iter().all(|x| x.is_finite()),
            ConvexSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
            ConvexSet::Simplex { scale, .. } => {
                v.iter().all(|x| *x >= -tol) && (v.iter().sum::<f64>() - scale).abs() <= tol
            }
            ConvexSet::BudgetSimplex { budget, .. } => {
                v.iter().all(|x| *x >= -tol) && v.iter().sum::<f64>() <= budget + tol
            }
            ConvexSet::Ball { center, radius } => linalg::dist(v, center) <= radius + tol,
        }
    }

    /// Deterministic interior reference point: origin, box midpoint, barycenter or ball center.
    pub fn center(&self) -> Vec<f64> {
        match self {
            ConvexSet::FullSpace { dim } => vec![0.0; *dim],
            ConvexSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            ConvexSet::Simplex { dim, scale } => vec![scale / *dim as f64; *dim],
            // barycenter of the vertices {0, budget * e_i}
            ConvexSet::BudgetSimplex { dim, budget } => vec![budget / (*dim as f64 + 1.0); *dim],
            ConvexSet::Ball { center, .. } => center.clone(),
        }
    }

    /// Upper bound on `||v||` over the set; infinite for the full space.
    pub fn norm_bound(&self) -> f64 {
        match self {
            ConvexSet::FullSpace { .. } => f64::INFINITY,
            ConvexSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Simplex { scale, .. } => *scale,
            ConvexSet::BudgetSimplex { budget, .. } => *budget,
            ConvexSet::Ball { center, radius } => linalg::norm(center) + radius,
        }
    }

    pub fn is_nonnegative_orthant_subset(&self) -> bool {
        matches!(self, ConvexSet::Simplex { .. } | ConvexSet::BudgetSimplex { .. })
    }
}

/// Euclidean projection onto `set`.
pub fn project(set: &ConvexSet, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: v.len(),
        });
    }
    Ok(match set {
        ConvexSet::FullSpace { .. } => v.to_vec(),
        ConvexSet::Box { lower, upper } => v
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(x, (l, u))| x.clamp(*l, *u))
            .collect(),
        ConvexSet::Simplex { scale, .. } => project_simplex(v, *scale),
        ConvexSet::BudgetSimplex { budget, .. } => {
            let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
            if clipped.iter().sum::<f64>() <= *budget {
                clipped
            } else {
                project_simplex(v, *budget)
            }
        }
        ConvexSet::Ball { center, radius } => {
            let d = linalg::dist(v, center);
            if d <= *radius {
                v.to_vec()
            } else {
                center
                    .iter()
                    .zip(v)
                    .map(|(c, x)| c + radius * (x - c) / d)
                    .collect()
            }
        }
    })
}

/// Sort-based projection onto `{v >= 0, sum(v) = scale}`.
fn project_simplex(v: &[f64], scale: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - scale) / (k as f64 + 1.0);
        if u - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Prox-friendly convex regularizers `h_i` on the minimization blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum XRegularizer {
    Zero,
    /// `weight * ||x||_1`
    L1 {
        weight: f64,
    },
    /// `(weight / 2) * ||x||^2`
    SquaredL2 {
        weight: f64,
    },
}

impl XRegularizer {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            XRegularizer::Zero => 0.0,
            XRegularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            XRegularizer::SquaredL2 { weight } => 0.5 * weight * linalg::norm_sq(x),
        }
    }
}

/// Prox-friendly convex regularizers `g` on the maximization block.
#[derive(Debug, Clone, PartialEq)]
pub enum YRegularizer {
    Zero,
    /// `(weight / 2) * ||y - anchor||^2`
    SquaredDistance {
        weight: f64,
        anchor: Vec<f64>,
    },
}

impl YRegularizer {
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            YRegularizer::Zero => 0.0,
            YRegularizer::SquaredDistance { weight, anchor } => 0.5 * weight * linalg::dist_sq(y, anchor),
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `argmin_{x in set} h(x) + (beta/2) ||x - v||^2`.
pub fn prox_x(h: &XRegularizer, set: &ConvexSet, beta: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    match h {
        XRegularizer::Zero => project(set, v),
        XRegularizer::SquaredL2 { weight } => project(set, &linalg::scale(v, beta / (weight + beta))),
        XRegularizer::L1 { weight } => {
            let t = weight / beta;
            match set {
                // separable: shrink, then clip coordinate-wise
                ConvexSet::FullSpace { .. } | ConvexSet::Box { .. } => {
                    let shrunk: Vec<f64> = v.iter().map(|x| soft_threshold(*x, t)).collect();
                    project(set, &shrunk)
                }
                // ||x||_1 = sum(x) on the nonnegative orthant
                ConvexSet::Simplex { .. } | ConvexSet::BudgetSimplex { .. } => {
                    let shifted: Vec<f64> = v.iter().map(|x| x - t).collect();
                    project(set, &shifted)
                }
                ConvexSet::Ball { .. } => Err(Error::UnsupportedProx(
                    "l1 regularizer over a ball has no closed form".into(),
                )),
            }
        }
    }
}

/// `argmax_{y in set} -g(y) - (1/(2 rho)) ||y - w||^2`.
pub fn prox_y(g: &YRegularizer, set: &ConvexSet, rho: f64, w: &[f64]) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    match g {
        YRegularizer::Zero => project(set, w),
        YRegularizer::SquaredDistance { weight, anchor } => {
            if anchor.len() != w.len() {
                return Err(Error::DimensionMismatch {
                    expected: w.len(),
                    got: anchor.len(),
                });
            }
            let denom = weight + 1.0 / rho;
            let target: Vec<f64> = w
                .iter()
                .zip(anchor)
                .map(|(wi, qi)| (wi / rho + weight * qi) / denom)
                .collect();
            project(set, &target)
        }
    }
}
