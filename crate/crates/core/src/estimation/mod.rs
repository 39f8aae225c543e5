//! Parameter estimation for the transmuted geometric distribution.
//!
//! Five estimators are provided: sample proportions of zeros and ones,
//! sample quantiles, the method of moments (root and least-squares forms),
//! direct maximum likelihood, and maximum likelihood through EM with
//! standard errors from Louis's identity.

mod em;
mod likelihood;
mod mle;
pub(crate) mod optim;
mod simple;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TgdError};
use crate::params::TgdParams;

pub use em::{em_default_init, em_fit, em_posterior, louis_info, louis_se, EmFit, EmOptions, EmState};
pub use likelihood::{expected_info_null, loglik, observed_info, score};
pub use mle::{mle, mle_local, mle_with, MleOptions};
pub use simple::{
    estimate_moments, estimate_proportions, estimate_quantiles, moments_from, moments_min_from,
    population_moments, proportions_from, quantiles_from, MomentVariant,
};

/// Width of the margin kept between estimates and the edges of the
/// parameter box.
pub const BOX_EPS: f64 = 1e-6;

/// Estimates closer than this to an edge are flagged as boundary estimates.
pub const BOUNDARY_FLAG: f64 = 1e-4;

/// Estimation procedure that produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Proportion,
    Quantile,
    Moment,
    MomentMin,
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "EM")]
    Em,
}

/// Outcome of one TGD fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: TgdParams,
    pub se_q: Option<f64>,
    pub se_alpha: Option<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub boundary: bool,
}

impl FitResult {
    /// Number of free parameters of the TGD.
    pub const FREE_PARAMS: u32 = 2;

    pub(crate) fn new(
        params: TgdParams,
        loglik: f64,
        method: Method,
        converged: bool,
        iterations: usize,
    ) -> Self {
        Self {
            params,
            se_q: None,
            se_alpha: None,
            loglik,
            aic: aic(loglik, Self::FREE_PARAMS),
            method,
            converged,
            iterations,
            boundary: params.boundary_distance() < BOUNDARY_FLAG,
        }
    }

    pub(crate) fn with_se(mut self, se: Option<(f64, f64)>) -> Self {
        if let Some((sq, sa)) = se {
            self.se_q = Some(sq);
            self.se_alpha = Some(sa);
        }
        self
    }
}

/// Akaike information criterion `-2 loglik + 2 k`.
pub fn aic(loglik: f64, free_params: u32) -> f64 {
    -2.0 * loglik + 2.0 * f64::from(free_params)
}

/// Symmetric 2x2 information matrix ordered `(q, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoMatrix {
    m: [[f64; 2]; 2],
}

impl InfoMatrix {
    pub fn new(qq: f64, q_alpha: f64, alpha_alpha: f64) -> Self {
        Self {
            m: [[qq, q_alpha], [q_alpha, alpha_alpha]],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m[0][0] > 0.0 && self.determinant() > 0.0 && self.m[1][1] > 0.0
    }

    /// Inverse, available only for a positive definite matrix.
    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        if !self.is_positive_definite() {
            return Err(TgdError::SingularInformation);
        }
        let det = self.determinant();
        Ok([
            [self.m[1][1] / det, -self.m[0][1] / det],
            [-self.m[1][0] / det, self.m[0][0] / det],
        ])
    }

    /// `(se_q, se_alpha)` from the diagonal of the inverse.
    pub fn standard_errors(&self) -> Result<(f64, f64)> {
        let inv = self.inverse()?;
        Ok((inv[0][0].sqrt(), inv[1][1].sqrt()))
    }

    /// Quadratic form `u^T I^{-1} u`.
    pub fn inverse_quadratic_form(&self, u: [f64; 2]) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(u[0] * (inv[0][0] * u[0] + inv[0][1] * u[1])
            + u[1] * (inv[1][0] * u[0] + inv[1][1] * u[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn info_inverse_and_flags() {
        let i = InfoMatrix::new(4.0, 1.0, 2.0);
        let inv = i.inverse().unwrap();
        assert!((inv[0][0] - 2.0 / 7.0).abs() < 1e-15);
        assert!((inv[0][1] + 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(inv[0][1], inv[1][0]);
        let (sq, sa) = i.standard_errors().unwrap();
        assert!((sa - (4.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert!(sq > 0.0);
        assert!((i.inverse_quadratic_form([0.0, 1.0]).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(
            InfoMatrix::new(1.0, 2.0, 1.0).inverse(),
            Err(TgdError::SingularInformation)
        );
    }

    #[test]
    fn aic_counts_parameters() {
        assert!((aic(-339.354, 2) - 682.708).abs() < 1e-9);
        assert_eq!(aic(-10.0, 1), 22.0);
    }
}
