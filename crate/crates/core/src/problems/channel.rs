use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::spectral_norm;

/// Gains of a `K`-user, `N`-channel interference channel with an optional jammer.
///
/// `gains[n][l][k]` is the gain from transmitter `l` to receiver `k` on channel `n`;
/// `jammer_gains[n][k]` is the gain from the jammer to receiver `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub gains: Vec<Vec<Vec<f64>>>,
    pub jammer_gains: Vec<Vec<f64>>,
    pub noise: f64,
    pub user_budget: f64,
    pub jammer_budget: f64,
}

fn rayleigh_gain(rng: &mut ChaCha8Rng) -> f64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (re * re + im * im) / 2.0
}

impl ChannelModel {
    /// Gains `|h|^2` of unit-variance circular complex Gaussian coefficients, with
    /// `sigma^2 = 1/2`, `p_max = 10^{snr_db / 10}` and a jammer budget of `N / 2`.
    pub fn random(users: usize, channels: usize, snr_db: f64, seed: u64) -> Result<Self> {
        if users == 0 || channels == 0 {
            return Err(invalid("users", "need at least one user and one channel"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = (0..channels)
            .map(|_| {
                (0..users)
                    .map(|_| (0..users).map(|_| rayleigh_gain(&mut rng)).collect())
                    .collect()
            })
            .collect();
        let jammer_gains = (0..channels)
            .map(|_| (0..users).map(|_| rayleigh_gain(&mut rng)).collect())
            .collect();
        let model = ChannelModel {
            gains,
            jammer_gains,
            noise: 0.5,
            user_budget: 10f64.powf(snr_db / 10.0),
            jammer_budget: channels as f64 / 2.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn users(&self) -> usize {
        self.gains.first().map_or(0, |g| g.len())
    }

    pub fn channels(&self) -> usize {
        self.gains.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (k, n) = (self.users(), self.channels());
        if k == 0 || n == 0 {
            return Err(invalid("gains", "need at least one user and one channel"));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return Err(invalid("noise", format!("must be positive, got {}", self.noise)));
        }
        if !(self.user_budget > 0.0) || !(self.jammer_budget > 0.0) {
            return Err(invalid("budget", "power budgets must be positive"));
        }
        if self.jammer_gains.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.jammer_gains.len(),
            });
        }
        for (g, j) in self.gains.iter().zip(&self.jammer_gains) {
            if g.len() != k || g.iter().any(|row| row.len() != k) || j.len() != k {
                return Err(invalid(
                    "gains",
                    "every channel needs a K x K gain matrix and K jammer gains",
                ));
            }
            let all = g.iter().flatten().chain(j);
            if all.into_iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid("gains", "gains must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// Interference-plus-noise `D` and total received power `T = D + a_kk x_k` at
    /// receiver `k` on channel `n`.
    pub fn powers(&self, x: &[Vec<f64>], jammer: Option<&[f64]>, n: usize, k: usize) -> (f64, f64) {
        let g = &self.gains[n];
        let mut d = self.noise;
        for (j, xj) in x.iter().enumerate() {
            if j != k {
                d += g[j][k] * xj[n];
            }
        }
        if let Some(y) = jammer {
            d += self.jammer_gains[n][k] * y[n];
        }
        debug_assert!(d > 0.0, "interference-plus-noise must stay positive");
        (d, d + g[k][k] * x[k][n])
    }

    /// `R_k = sum_n log(1 + a_kk x_k^n / D_k^n)` for every user.
    pub fn rates(&self, x: &[Vec<f64>], jammer: Option<&[f64]>) -> Vec<f64> {
        (0..self.users())
            .map(|k| {
                (0..self.channels())
                    .map(|n| {
                        let (d, t) = self.powers(x, jammer, n, k);
                        (t / d).ln()
                    })
                    .sum()
            })
            .collect()
    }

    /// Gradient of `sum_k w_k R_k` with respect to user `i`'s powers.
    pub fn weighted_rate_grad(
        &self,
        x: &[Vec<f64>],
        jammer: Option<&[f64]>,
        weights: &[f64],
        i: usize,
    ) -> Vec<f64> {
        (0..self.channels())
            .map(|n| {
                let g = &self.gains[n];
                (0..self.users())
                    .map(|k| {
                        let (d, t) = self.powers(x, jammer, n, k);
                        let partial = if k == i {
                            g[i][i] / t
                        } else {
                            g[i][k] * (1.0 / t - 1.0 / d)
                        };
                        weights[k] * partial
                    })
                    .sum()
            })
            .collect()
    }

    /// Gradient of the sum-rate with respect to the jammer powers.
    pub fn sum_rate_grad_jammer(&self, x: &[Vec<f64>], jammer: &[f64]) -> Vec<f64> {
        (0..self.channels())
            .map(|n| {
                (0..self.users())
                    .map(|k| {
                        let (d, t) = self.powers(x, Some(jammer), n, k);
                        self.jammer_gains[n][k] * (1.0 / t - 1.0 / d)
                    })
                    .sum()
            })
            .collect()
    }

    /// Coefficients of `T_k^n` in the per-channel variables `(x_1^n, ..., x_K^n, y^n)`.
    fn coefficients(&self, n: usize, k: usize, with_jammer: bool) -> Vec<f64> {
        let mut c: Vec<f64> = (0..self.users()).map(|j| self.gains[n][j][k]).collect();
        if with_jammer {
            c.push(self.jammer_gains[n][k]);
        }
        c
    }

    /// Lipschitz bounds for the negative sum-rate over the nonnegative orthant: one per user
    /// block, then the jammer block.
    ///
    /// Each Hessian entry `(r, s)` of channel `n` is bounded by `sum_k c_k[r] c_k[s] / sigma^4`,
    /// so row `r` has norm at most `|sum_k c_k[r] c_k| / sigma^4`.
    pub fn sum_rate_lipschitz(&self) -> (Vec<f64>, f64) {
        let users = self.users();
        let s4 = self.noise * self.noise;
        let mut rows = vec![0.0f64; users + 1];
        for n in 0..self.channels() {
            let cs: Vec<Vec<f64>> = (0..users).map(|k| self.coefficients(n, k, true)).collect();
            for (r, slot) in rows.iter_mut().enumerate() {
                let mut acc = vec![0.0; users + 1];
                for c in &cs {
                    for (a, cj) in acc.iter_mut().zip(c) {
                        *a += c[r] * cj;
                    }
                }
                *slot = slot.max(acc.iter().map(|v| v * v).sum::<f64>().sqrt() / s4);
            }
        }
        let l_y = rows.pop().unwrap_or(0.0);
        (rows, l_y)
    }

    /// Lipschitz bounds for `-sum_k y_k R_k` with `y` on the simplex, ignoring the jammer:
    /// `L_{x_i}` for every user, and the bound on `|R(x) - R(x')| / |x - x'|`.
    pub fn maxmin_lipschitz(&self) -> (Vec<f64>, f64) {
        let users = self.users();
        let s2 = self.noise;
        let mut l_x = vec![0.0f64; users];
        for n in 0..self.channels() {
            for k in 0..users {
                let c = self.coefficients(n, k, false);
                let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (i, slot) in l_x.iter_mut().enumerate() {
                    *slot = slot.max(c[i] * cn / (s2 * s2));
                }
            }
        }
        let nch = self.channels();
        let bound = DMatrix::from_fn(users, users * nch, |k, col| {
            let (j, n) = (col / nch, col % nch);
            self.gains[n][j][k] / s2
        });
        (l_x, spectral_norm(&bound))
    }
}
