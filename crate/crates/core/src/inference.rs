//! Likelihood ratio, Rao score and Wald tests of `alpha = 0`.
//!
//! The alternative fit used by the likelihood ratio and Wald tests is the
//! local maximum reached by ascending from the geometric null `(q~, 0)`.
//! `TGD(q, 1)` is itself geometric with parameter `q^2`, so the null model
//! also sits on the `alpha = 1` edge; the global maximum frequently jumps
//! there under the null, which corrupts the Wald statistic.

use serde::{Deserialize, Serialize};

use crate::data::FreqTable;
use crate::error::{Result, TgdError};
use crate::estimation::{expected_info_null, mle_local, observed_info, score, FitResult};
use crate::models::{fit_geometric, GeometricFit};
use crate::params::TgdParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestMethod {
    #[serde(rename = "LRT")]
    Lrt,
    Score,
    Wald,
}

/// Information matrix used by the score test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullInformation {
    /// Fisher information of the geometric null in closed form.
    #[default]
    Expected,
    /// Negated Hessian of the sample log-likelihood at the null.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Geometric maximum likelihood estimate under the null.
    pub null_q: f64,
    /// Alternative fit, for the tests that use one.
    pub alt: Option<TgdParams>,
}

impl TestResult {
    fn new(method: TestMethod, statistic: f64, null_q: f64, alt: Option<TgdParams>) -> Result<Self> {
        Ok(Self {
            method,
            statistic,
            df: 1,
            p_value: chi2_sf(statistic, 1)?,
            null_q,
            alt,
        })
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Upper tail of the chi-square distribution for one or two degrees of
/// freedom.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(TgdError::Domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    match df {
        1 => Ok(libm::erfc((x / 2.0).sqrt())),
        2 => Ok((-x / 2.0).exp()),
        other => Err(TgdError::UnsupportedDf(other)),
    }
}

fn null_fit(data: &FreqTable) -> Result<GeometricFit> {
    let g = fit_geometric(data);
    if g.boundary {
        return Err(TgdError::InsufficientData(
            "all observations are zero; the geometric null is degenerate".into(),
        ));
    }
    Ok(g)
}

/// Alternative fit ascending from the geometric null.
pub fn alternative_fit(data: &FreqTable) -> Result<FitResult> {
    let g = null_fit(data)?;
    mle_local(data, TgdParams::geometric(g.q)?)
}

fn lrt_from(null: &GeometricFit, alt: &FitResult) -> Result<TestResult> {
    let stat = (2.0 * (alt.loglik - null.loglik)).max(0.0);
    TestResult::new(TestMethod::Lrt, stat, null.q, Some(alt.params))
}

fn wald_from(null: &GeometricFit, alt: &FitResult, data: &FreqTable) -> Result<TestResult> {
    if alt.boundary {
        return Err(TgdError::SingularInformation);
    }
    let inv = observed_info(&alt.params, data).inverse()?;
    let a = alt.params.alpha();
    TestResult::new(TestMethod::Wald, a * a / inv[1][1], null.q, Some(alt.params))
}

fn score_from(null: &GeometricFit, data: &FreqTable, info: NullInformation) -> Result<TestResult> {
    let p = TgdParams::geometric(null.q)?;
    let u = score(&p, data);
    let i = match info {
        NullInformation::Expected => expected_info_null(null.q, data.n_f64()),
        NullInformation::Observed => observed_info(&p, data),
    };
    let stat = i.inverse_quadratic_form(u)?.max(0.0);
    TestResult::new(TestMethod::Score, stat, null.q, None)
}

/// `2 (l(alt) - l(null))`, clamped at zero.
pub fn lrt(data: &FreqTable) -> Result<TestResult> {
    let null = null_fit(data)?;
    let alt = mle_local(data, TgdParams::geometric(null.q)?)?;
    lrt_from(&null, &alt)
}

/// `U' I^-1 U` at `(q~, 0)`.
pub fn score_test(data: &FreqTable, info: NullInformation) -> Result<TestResult> {
    score_from(&null_fit(data)?, data, info)
}

/// `alpha^2 / Var(alpha)` with the variance from the inverse observed
/// information at the alternative fit.
pub fn wald_test(data: &FreqTable) -> Result<TestResult> {
    let null = null_fit(data)?;
    let alt = mle_local(data, TgdParams::geometric(null.q)?)?;
    wald_from(&null, &alt, data)
}

/// All tests on one dataset, sharing the null and alternative fits.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBattery {
    pub lrt: Result<TestResult>,
    pub score: Result<TestResult>,
    pub score_observed: Result<TestResult>,
    pub wald: Result<TestResult>,
}

pub fn test_battery(data: &FreqTable) -> TestBattery {
    let null = match null_fit(data) {
        Ok(g) => g,
        Err(e) => {
            return TestBattery {
                lrt: Err(e.clone()),
                score: Err(e.clone()),
                score_observed: Err(e.clone()),
                wald: Err(e),
            }
        }
    };
    let alt = TgdParams::geometric(null.q).and_then(|p| mle_local(data, p));
    TestBattery {
        lrt: alt.as_ref().map_err(Clone::clone).and_then(|a| lrt_from(&null, a)),
        score: score_from(&null, data, NullInformation::Expected),
        score_observed: score_from(&null, data, NullInformation::Observed),
        wald: alt.as_ref().map_err(Clone::clone).and_then(|a| wald_from(&null, a, data)),
    }
}
