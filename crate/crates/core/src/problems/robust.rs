use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dist_sq, dot, norm};
use crate::point::BlockPoint;
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::prox::{ConvexSet, YRegularizer};
use crate::schedule::Regime;

/// A labeled dataset with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Domain {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Mean logistic loss of the linear classifier `x`.
    pub fn loss(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(s, t)| softplus(-t * dot(s, x)))
            .sum();
        total / self.len() as f64
    }

    pub fn loss_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (s, t) in self.features.iter().zip(&self.labels) {
            let c = -t * sigmoid(-t * dot(s, x));
            for (gj, sj) in g.iter_mut().zip(s) {
                *gj += c * sj;
            }
        }
        let n = self.len() as f64;
        g.iter_mut().for_each(|v| *v /= n);
        g
    }

    /// Classification error rate of `x`.
    pub fn error_rate(&self, x: &[f64]) -> f64 {
        let wrong = self
            .features
            .iter()
            .zip(&self.labels)
            .filter(|(s, t)| dot(s, x) * **t <= 0.0)
            .count();
        wrong as f64 / self.len() as f64
    }

    /// Samples with standard normal features labeled by `sign(<w, s>)`, each label
    /// flipped with probability `flip`.
    pub fn synthetic(w: &[f64], samples: usize, flip: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut features = Vec::with_capacity(samples);
        let mut labels = Vec::with_capacity(samples);
        for _ in 0..samples {
            let s: Vec<f64> = (0..w.len()).map(|_| StandardNormal.sample(rng)).collect();
            let mut t = if dot(w, &s) >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < flip {
                t = -t;
            }
            features.push(s);
            labels.push(t);
        }
        Domain { features, labels }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `min_x max_{y in simplex} sum_m y_m F_m(x) - (lambda/2) |y - q|^2` with logistic losses `F_m`.
#[derive(Debug, Clone)]
pub struct RobustProblem {
    domains: Vec<Domain>,
    lambda: f64,
    prior: Vec<f64>,
    dim: usize,
    x_set: ConvexSet,
    y_set: ConvexSet,
    g: YRegularizer,
    constants: ProblemConstants,
}

impl RobustProblem {
    pub fn new(domains: Vec<Domain>, lambda: f64, prior: Vec<f64>) -> Result<Self> {
        if domains.len() < 2 {
            return Err(invalid("domains", "need at least two domains"));
        }
        if domains.iter().any(Domain::is_empty) {
            return Err(Error::Degenerate("empty domain".into()));
        }
        let dim = domains[0].features[0].len();
        for d in &domains {
            if d.features.len() != d.labels.len() || d.features.iter().any(|s| s.len() != dim) {
                return Err(invalid("domains", "features and labels disagree in shape"));
            }
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if prior.len() != domains.len() {
            return Err(Error::DimensionMismatch {
                expected: domains.len(),
                got: prior.len(),
            });
        }
        let y_set = ConvexSet::simplex(domains.len());
        if !y_set.contains(&prior, 1e-9) {
            return Err(Error::OffSimplex("q".into()));
        }
        let grad_bounds: Vec<f64> = domains
            .iter()
            .map(|d| d.features.iter().map(|s| norm(s)).sum::<f64>() / d.len() as f64)
            .collect();
        let l_y = grad_bounds.iter().map(|g| g * g).sum::<f64>().sqrt() + lambda;
        let l_x = domains
            .iter()
            .map(|d| {
                let s = nalgebra::DMatrix::from_fn(d.len(), dim, |r, c| d.features[r][c]);
                let gram = s.tr_mul(&s) / d.len() as f64;
                gram.symmetric_eigenvalues().max() / 4.0
            })
            .fold(0.0, f64::max);
        Ok(RobustProblem {
            domains,
            lambda,
            prior,
            dim,
            x_set: ConvexSet::FullSpace { dim },
            y_set,
            g: YRegularizer::Zero,
            constants: ProblemConstants { l_x: vec![l_x], l_y },
        })
    }

    /// Two domains in dimension `dim`: a clean one, and one whose separator is rotated
    /// and whose labels are flipped with probability `flip`.
    pub fn synthetic_domains(dim: usize, samples: usize, flip: f64, seed: u64) -> Vec<Domain> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w2: Vec<f64> = w1
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + 0.8 * z
            })
            .collect();
        let first = Domain::synthetic(&w1, samples, 0.0, &mut rng);
        let second = Domain::synthetic(&w2, samples, flip, &mut rng);
        vec![first, second]
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn losses(&self, x: &[f64]) -> Vec<f64> {
        self.domains.iter().map(|d| d.loss(x)).collect()
    }
}

impl MinMaxProblem for RobustProblem {
    fn name(&self) -> &str {
        "robust"
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.dim]
    }

    fn y_dim(&self) -> usize {
        self.domains.len()
    }

    fn regime(&self) -> Regime {
        Regime::StronglyConcave { theta: self.lambda }
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn f(&self, point: &BlockPoint) -> f64 {
        let x = &point.x[0];
        let weighted: f64 = self
            .domains
            .iter()
            .zip(&point.y)
            .map(|(d, y)| y * d.loss(x))
            .sum();
        weighted - self.lambda / 2.0 * dist_sq(&point.y, &self.prior)
    }

    fn grad_x(&self, point: &BlockPoint, _block: usize) -> Vec<f64> {
        let x = &point.x[0];
        let mut g = vec![0.0; self.dim];
        for (d, y) in self.domains.iter().zip(&point.y) {
            for (gj, dj) in g.iter_mut().zip(d.loss_grad(x)) {
                *gj += y * dj;
            }
        }
        g
    }

    fn grad_y(&self, point: &BlockPoint) -> Vec<f64> {
        let x = &point.x[0];
        self.domains
            .iter()
            .zip(point.y.iter().zip(&self.prior))
            .map(|(d, (y, q))| d.loss(x) - self.lambda * (y - q))
            .collect()
    }

    fn x_set(&self, _block: usize) -> &ConvexSet {
        &self.x_set
    }

    fn y_set(&self) -> &ConvexSet {
        &self.y_set
    }

    fn y_regularizer(&self) -> &YRegularizer {
        &self.g
    }
}
