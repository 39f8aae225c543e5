//! Probability law of the transmuted geometric distribution.
//!
//! With `g(y) = (1 - q) q^y` the geometric pmf, the TGD pmf is
//! `p_y = (1 - alpha) (1 - q) q^y + alpha (1 - q^2) q^(2y)`, and the
//! survival function is `P(Y >= y) = (1 - alpha) q^y + alpha q^(2y)`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Result, TgdError};
use crate::params::{RngSeed, TgdParams};

/// `q^y` evaluated as `exp(y ln q)`.
#[inline]
pub(crate) fn qpow(q: f64, y: f64) -> f64 {
    (y * q.ln()).exp()
}

impl TgdParams {
    /// Bracket `(1 - alpha) + alpha (1 + q) q^y`, the ratio of the TGD pmf to
    /// the geometric pmf.
    #[inline]
    pub(crate) fn lr_bracket(&self, y: u64) -> f64 {
        let q = self.q();
        let a = self.alpha();
        (1.0 - a) + a * (1.0 + q) * qpow(q, y as f64)
    }

    pub fn pmf(&self, y: u64) -> f64 {
        let q = self.q();
        (1.0 - q) * qpow(q, y as f64) * self.lr_bracket(y)
    }

    /// `ln(1 - q) + y ln q + ln((1 - alpha) + alpha q^y (1 + q))`.
    ///
    /// Returns `-inf` when the pmf is exactly zero.
    pub fn log_pmf(&self, y: u64) -> f64 {
        let q = self.q();
        let bracket = self.lr_bracket(y);
        if bracket <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (-q).ln_1p() + y as f64 * q.ln() + bracket.ln()
    }

    /// Survival function `P(Y >= y)`; equals 1 at `y = 0`.
    pub fn sf(&self, y: u64) -> f64 {
        let q = self.q();
        let a = self.alpha();
        let t = qpow(q, y as f64);
        t * ((1.0 - a) + a * t)
    }

    /// `P(Y <= y)`, zero for negative `y`.
    pub fn cdf(&self, y: i64) -> f64 {
        if y < 0 {
            return 0.0;
        }
        1.0 - self.sf(y as u64 + 1)
    }

    /// Smallest `y >= 0` with `cdf(y) >= u`.
    ///
    /// Inverts the quadratic `(1 - alpha) t + alpha t^2 = 1 - u` in
    /// `t = q^(y+1)` using the cancellation-free root
    /// `t = 2 (1 - u) / ((1 - alpha) + sqrt((1 - alpha)^2 + 4 alpha (1 - u)))`,
    /// which reduces to the geometric inverse at `alpha = 0`. A local integer
    /// scan against `cdf` absorbs rounding at the step edges.
    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&u) {
            return Err(TgdError::Domain(format!("u must lie in [0, 1), got {u}")));
        }
        if u == 0.0 {
            return Ok(0);
        }
        let a = self.alpha();
        let tail = 1.0 - u;
        let b = 1.0 - a;
        let t = 2.0 * tail / (b + (b * b + 4.0 * a * tail).sqrt());
        let raw = (t.ln() / self.q().ln()).ceil() - 1.0;
        let mut y = if raw.is_finite() && raw > 0.0 {
            raw as u64
        } else {
            0
        };
        while y > 0 && self.cdf(y as i64 - 1) >= u {
            y -= 1;
        }
        while self.cdf(y as i64) < u {
            y += 1;
        }
        Ok(y)
    }

    /// Probability generating function `E[z^Y]`, defined for `|q^2 z| < 1`
    /// away from the pole at `z = 1/q`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        let q = self.q();
        let a = self.alpha();
        let d1 = 1.0 - q * z;
        let d2 = 1.0 - q * q * z;
        if !((q * q * z).abs() < 1.0) || d1.abs() < 1e-12 || d2.abs() < 1e-12 {
            return Err(TgdError::Domain(format!("pgf undefined at z = {z}")));
        }
        Ok((1.0 - q) * (1.0 + a * q * (1.0 - z) - q * q * z) / (d1 * d2))
    }

    /// `E[Y (Y-1) ... (Y-r+1)]`.
    pub fn factorial_moment(&self, r: u32) -> f64 {
        let q = self.q();
        let a = self.alpha();
        let fact: f64 = (1..=r).map(f64::from).product();
        let g1 = q / (1.0 - q);
        let g2 = q * q / (1.0 - q * q);
        fact * ((1.0 - a) * g1.powi(r as i32) + a * g2.powi(r as i32))
    }

    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    /// `E[Y^2]` from the first two factorial moments.
    pub fn second_raw_moment(&self) -> f64 {
        self.factorial_moment(2) + self.factorial_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.factorial_moment(2) + m - m * m
    }

    /// Smallest maximizer of the pmf.
    ///
    /// For `alpha < 0`, `p_{y+1} > p_y` iff `q^y > c` with
    /// `c = (1 - alpha) / (-alpha (1 + q)^2)`, so the mode is the number of
    /// such `y`. For `alpha >= 0` the ratio `p_{y+1}/p_y` stays below `q`.
    pub fn mode(&self) -> u64 {
        let q = self.q();
        let a = self.alpha();
        if a >= 0.0 {
            return 0;
        }
        let c = (1.0 - a) / (-a * (1.0 + q) * (1.0 + q));
        if c >= 1.0 {
            return 0;
        }
        let mut y = (c.ln() / q.ln()).ceil().max(0.0) as u64;
        while y > 0 && self.pmf(y - 1) >= self.pmf(y) {
            y -= 1;
        }
        while self.pmf(y + 1) > self.pmf(y) {
            y += 1;
        }
        y
    }

    /// `n` draws by inverse transform of the quantile function.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Vec<u64> {
        let mut rng = seed.rng();
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                // u is in [0, 1), which `quantile` accepts
                self.quantile(u).expect("uniform draw in [0, 1)")
            })
            .collect()
    }

    /// `n` draws from the latent construction: with probability
    /// `(1 + alpha) / 2` the minimum of two geometric(q) draws, otherwise the
    /// maximum.
    pub fn sample_mixture(&self, n: usize, seed: RngSeed) -> Vec<u64> {
        let mut rng = seed.rng();
        self.sample_mixture_with(&mut rng, n)
    }

    pub fn sample_mixture_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        let geo = Geometric::new(1.0 - self.q()).expect("q in (0, 1)");
        let p_min = 0.5 * (1.0 + self.alpha());
        (0..n)
            .map(|_| {
                let take_min = rng.random_bool(p_min);
                let z1 = geo.sample(rng);
                let z2 = geo.sample(rng);
                if take_min {
                    z1.min(z2)
                } else {
                    z1.max(z2)
                }
            })
            .collect()
    }
}
