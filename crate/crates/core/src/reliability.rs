//! Discrete reliability functions: hazard, second rate of failure, reversed
//! hazard and mean residual life, plus the geometric likelihood ratio used by
//! the stochastic-order results.

use serde::{Deserialize, Serialize};

use crate::distribution::qpow;
use crate::params::TgdParams;

/// Shape of the hazard rate as a function of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HazardClass {
    Increasing,
    Decreasing,
    Constant,
}

/// One row of the reliability table emitted by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilityRow {
    pub y: u64,
    pub pmf: f64,
    pub sf: f64,
    pub hazard: f64,
    pub second_hazard: f64,
    pub reversed_hazard: f64,
    pub mrl: f64,
}

impl TgdParams {
    /// `(1 - alpha) + alpha q^y`, the survival function divided by `q^y`.
    #[inline]
    fn sf_bracket(&self, y: u64) -> f64 {
        let a = self.alpha();
        (1.0 - a) + a * qpow(self.q(), y as f64)
    }

    /// `P(Y = y) / P(Y >= y)`.
    ///
    /// The common factor `q^y` is cancelled, so the value stays finite for
    /// arbitrarily large `y`.
    pub fn hazard(&self, y: u64) -> f64 {
        let q = self.q();
        let a = self.alpha();
        let t = qpow(q, y as f64);
        ((1.0 - a) * (1.0 - q) + a * t * (1.0 - q * q)) / self.sf_bracket(y)
    }

    /// `ln(S(y) / S(y+1))`.
    pub fn second_hazard(&self, y: u64) -> f64 {
        (self.sf_bracket(y) / (self.q() * self.sf_bracket(y + 1))).ln()
    }

    /// `P(Y = y) / P(Y <= y)`.
    pub fn reversed_hazard(&self, y: u64) -> f64 {
        if y == 0 {
            return 1.0;
        }
        self.pmf(y) / self.cdf(y as i64)
    }

    /// Mean residual life `E[Y - y | Y >= y]`.
    pub fn mrl(&self, y: u64) -> f64 {
        let q = self.q();
        let a = self.alpha();
        let num = q * ((1.0 + q) * (1.0 - a) + a * qpow(q, y as f64 + 1.0));
        num / ((1.0 - q * q) * self.sf_bracket(y))
    }

    /// `mrl(y + 1) - mrl(y)` in closed form.
    pub fn mrl_increment(&self, y: u64) -> f64 {
        let q = self.q();
        let a = self.alpha();
        (1.0 - a) * a * qpow(q, y as f64 + 1.0)
            / ((1.0 + q) * self.sf_bracket(y) * self.sf_bracket(y + 1))
    }

    /// Hazard class implied by the sign of `alpha`. `alpha = 1` is the
    /// geometric law of the minimum and has constant hazard `1 - q^2`.
    pub fn classify_hazard(&self) -> HazardClass {
        let a = self.alpha();
        if a == 0.0 || a == 1.0 {
            HazardClass::Constant
        } else if a < 0.0 {
            HazardClass::Increasing
        } else {
            HazardClass::Decreasing
        }
    }

    /// Hazard class observed by scanning `y = 0..=horizon`.
    ///
    /// Differences within `tol` count as flat. Returns `None` when the scan
    /// shows both increases and decreases.
    pub fn scan_hazard(&self, horizon: u64, tol: f64) -> Option<HazardClass> {
        let (mut up, mut down) = (false, false);
        let mut prev = self.hazard(0);
        for y in 1..=horizon {
            let h = self.hazard(y);
            if h > prev + tol {
                up = true;
            } else if h < prev - tol {
                down = true;
            }
            prev = h;
        }
        match (up, down) {
            (false, false) => Some(HazardClass::Constant),
            (true, false) => Some(HazardClass::Increasing),
            (false, true) => Some(HazardClass::Decreasing),
            (true, true) => None,
        }
    }

    /// `P(Y = z) / P(X = z)` for `X ~ geometric(q)`:
    /// `1 + alpha ((1 + q) q^z - 1)`.
    pub fn geometric_likelihood_ratio(&self, z: u64) -> f64 {
        self.lr_bracket(z)
    }

    pub fn reliability_row(&self, y: u64) -> ReliabilityRow {
        ReliabilityRow {
            y,
            pmf: self.pmf(y),
            sf: self.sf(y),
            hazard: self.hazard(y),
            second_hazard: self.second_hazard(y),
            reversed_hazard: self.reversed_hazard(y),
            mrl: self.mrl(y),
        }
    }

    pub fn reliability_table(&self, max_y: u64) -> Vec<ReliabilityRow> {
        (0..=max_y).map(|y| self.reliability_row(y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(q: f64, a: f64) -> TgdParams {
        TgdParams::new(q, a).unwrap()
    }

    #[test]
    fn hazard_examples() {
        for y in [0, 1, 7, 50] {
            assert_relative_eq!(p(0.5, 0.0).hazard(y), 0.5, max_relative = 1e-14);
            assert_relative_eq!(p(0.5, 1.0).hazard(y), 0.75, max_relative = 1e-14);
        }
        let d = p(0.6, -0.5);
        assert_relative_eq!(d.hazard(3), d.pmf(3) / d.sf(3), max_relative = 1e-12);
    }

    #[test]
    fn second_hazard_examples() {
        for y in [0, 3, 40] {
            assert_relative_eq!(p(0.5, 0.0).second_hazard(y), 2f64.ln(), max_relative = 1e-13);
            assert_relative_eq!(p(0.5, 1.0).second_hazard(y), 4f64.ln(), max_relative = 1e-13);
        }
        let d = p(0.7, 0.4);
        assert_relative_eq!(d.second_hazard(2), (d.sf(2) / d.sf(3)).ln(), max_relative = 1e-12);
    }

    #[test]
    fn reversed_hazard_examples() {
        for &(q, a) in &[(0.3, 0.2), (0.9, -1.0), (0.6, 1.0)] {
            assert_relative_eq!(p(q, a).reversed_hazard(0), 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(p(0.5, 0.0).reversed_hazard(1), 0.25 / 0.75, max_relative = 1e-14);
        let d = p(0.811, -0.465);
        assert_relative_eq!(d.reversed_hazard(2), d.pmf(2) / d.cdf(2), max_relative = 1e-14);
    }

    #[test]
    fn mrl_examples() {
        for y in [0, 2, 30] {
            assert_relative_eq!(p(0.5, 0.0).mrl(y), 1.0, max_relative = 1e-14);
            assert_relative_eq!(p(0.5, 1.0).mrl(y), 1.0 / 3.0, max_relative = 1e-14);
        }
        let d = p(0.6, -0.4);
        let tail: f64 = (6..400u64).map(|j| d.sf(j)).sum();
        assert_relative_eq!(d.mrl(5), tail / d.sf(5), max_relative = 1e-10);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(p(0.5, -0.3).classify_hazard(), HazardClass::Increasing);
        assert_eq!(p(0.5, 0.3).classify_hazard(), HazardClass::Decreasing);
        assert_eq!(p(0.5, 0.0).classify_hazard(), HazardClass::Constant);
        assert_eq!(p(0.5, 1.0).classify_hazard(), HazardClass::Constant);
        assert_eq!(p(0.5, -1.0).classify_hazard(), HazardClass::Increasing);
        for d in [p(0.5, -0.3), p(0.5, 0.3), p(0.5, 0.0), p(0.5, -1.0), p(0.8, 0.9)] {
            assert_eq!(d.scan_hazard(200, 1e-13), Some(d.classify_hazard()));
        }
    }

    #[test]
    fn table_has_expected_rows() {
        let rows = p(0.4, 0.2).reliability_table(10);
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].sf, 1.0);
        assert_eq!(rows[10].y, 10);
    }
}
