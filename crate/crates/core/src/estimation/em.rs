//! EM algorithm for the two-component representation
//! `TGD(q, alpha) = ((1+alpha)/2) min(X1, X2) + ((1-alpha)/2) max(X1, X2)`
//! with `X1, X2` iid geometric, and observed information by Louis's method.

use serde::Serialize;

use crate::data::FreqTable;
use crate::distribution::qpow;
use crate::error::{Result, TgdError};
use crate::estimation::optim::brent;
use crate::estimation::simple::moments_from;
use crate::estimation::{loglik, FitResult, InfoMatrix, Method, BOUNDARY_FLAG, BOX_EPS};
use crate::params::TgdParams;

/// Settings for [`em_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop when `max(|dq|, |dalpha|)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Record an [`EmState`] per iteration.
    pub keep_trace: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            keep_trace: false,
        }
    }
}

/// One EM iterate. `posteriors[i]` belongs to the i-th distinct value of the
/// data, in table order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmState {
    pub params: TgdParams,
    pub posteriors: Vec<f64>,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmFit {
    pub result: FitResult,
    pub trace: Vec<EmState>,
}

impl EmFit {
    /// The fit, or `ConvergenceFailure` if the iteration cap was reached.
    pub fn into_converged(self) -> Result<FitResult> {
        if self.result.converged {
            Ok(self.result)
        } else {
            Err(TgdError::ConvergenceFailure {
                iterations: self.result.iterations,
            })
        }
    }
}

/// Posterior probability that `y` came from the minimum component.
pub fn em_posterior(params: &TgdParams, y: u64) -> f64 {
    let (q, a) = (params.q(), params.alpha());
    if a >= 1.0 {
        return 1.0;
    }
    if a <= -1.0 {
        return 0.0;
    }
    let g = (1.0 + q) * qpow(q, y as f64);
    let top = (1.0 + a) * g;
    top / (top + (1.0 - a) * (2.0 - g))
}

/// Method-of-moments start, falling back to the geometric fit.
pub fn em_default_init(data: &FreqTable) -> TgdParams {
    let m1 = data.mean();
    match moments_from(m1, data.raw_moment2()) {
        Ok(p) if p.boundary_distance() >= BOUNDARY_FLAG => p,
        _ => TgdParams::clamped(m1 / (1.0 + m1), 0.0, BOX_EPS),
    }
}

/// Complete-data score in `q` with latent indicators replaced by weights.
fn complete_score_q(q: f64, data: &FreqTable, w: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((y, c), &wi) in data.weighted().zip(w) {
        let t = qpow(q, y);
        let h = 2.0 - (1.0 + q) * t;
        let dh = t + (1.0 + q) * y * t / q;
        let min_part = -2.0 * q / (1.0 - q * q) + 2.0 * y / q;
        let max_part = -1.0 / (1.0 - q) + y / q - dh / h;
        s += c * (wi * min_part + (1.0 - wi) * max_part);
    }
    s
}

fn posteriors(params: &TgdParams, data: &FreqTable) -> Vec<f64> {
    data.entries().iter().map(|&(y, _)| em_posterior(params, y)).collect()
}

/// One EM update given the E-step weights.
fn em_step(data: &FreqTable, w: &[f64]) -> Result<TgdParams> {
    if data.max_value() == 0 {
        return Err(TgdError::MStepBracketFailure);
    }
    let n = data.n_f64();
    let big_w: f64 = data.weighted().zip(w).map(|((_, c), &wi)| c * wi).sum();
    let lim = 1e-12;
    let alpha = (2.0 * big_w / n - 1.0).clamp(-1.0 + lim, 1.0 - lim);
    let q = brent(|q| complete_score_q(q, data, w), 1e-10, 1.0 - 1e-10, 1e-13)
        .ok_or(TgdError::MStepBracketFailure)?;
    TgdParams::new(q, alpha)
}

/// Runs EM from `init` until the parameter change drops below `opts.tol`.
///
/// Reaching `opts.max_iter` is not an error: the returned fit has
/// `converged == false`.
pub fn em_fit(data: &FreqTable, init: TgdParams, opts: &EmOptions) -> Result<EmFit> {
    if !init.is_interior() {
        return Err(TgdError::Domain("EM needs an interior alpha".into()));
    }
    let mut params = init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let w = posteriors(&params, data);
        let next = em_step(data, &w)?;
        if opts.keep_trace {
            trace.push(EmState {
                params,
                loglik: loglik(&params, data),
                posteriors: w,
            });
        }
        iterations += 1;
        let delta = (next.q() - params.q()).abs().max((next.alpha() - params.alpha()).abs());
        params = next;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if opts.keep_trace {
        trace.push(EmState {
            params,
            loglik: loglik(&params, data),
            posteriors: posteriors(&params, data),
        });
    }
    let params = TgdParams::clamped(params.q(), params.alpha(), BOX_EPS);
    let mut result = FitResult::new(params, loglik(&params, data), Method::Em, converged, iterations);
    if converged && params.boundary_distance() >= BOUNDARY_FLAG {
        result = result.with_se(louis_se(&params, data).ok());
    }
    Ok(EmFit { result, trace })
}

/// Observed information `l_c - l_m` from Louis's identity, ordered
/// `(q, alpha)`.
pub fn louis_info(params: &TgdParams, data: &FreqTable) -> InfoMatrix {
    let (q, a) = (params.q(), params.alpha());
    let n = data.n_f64();
    let (mut big_w, mut d_qq) = (0.0, 0.0);
    let (mut m_aa, mut m_aq, mut m_qq) = (0.0, 0.0, 0.0);
    let ca = 2.0 / (1.0 - a * a);
    for (y, c) in data.weighted() {
        let w = em_posterior(params, y as u64);
        let t = qpow(q, y);
        let h = 2.0 - (1.0 + q) * t;
        // derivatives of -ln h
        let dh = t + (1.0 + q) * y * t / q;
        let d2h = 2.0 * y * t / q + (1.0 + q) * y * (y - 1.0) * t / (q * q);
        let min_curv = 2.0 * (1.0 + q * q) / (1.0 - q * q).powi(2) + 2.0 * y / (q * q);
        let max_curv = 1.0 / (1.0 - q).powi(2) + y / (q * q) + d2h / h + (dh / h).powi(2);
        big_w += c * w;
        d_qq += c * (w * min_curv + (1.0 - w) * max_curv);
        let b = y / q - 2.0 * q / (1.0 - q * q) + 1.0 / (1.0 - q) + dh / h;
        let v = w * (1.0 - w);
        m_aa += c * ca * ca * v;
        m_aq += c * ca * b * v;
        m_qq += c * b * b * v;
    }
    let d_aa = big_w / (1.0 + a).powi(2) + (n - big_w) / (1.0 - a).powi(2);
    InfoMatrix::new(d_qq - m_qq, -m_aq, d_aa - m_aa)
}

/// Standard errors `(se_q, se_alpha)` from [`louis_info`].
pub fn louis_se(params: &TgdParams, data: &FreqTable) -> Result<(f64, f64)> {
    louis_info(params, data).standard_errors()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded;
    use crate::estimation::{mle, observed_info};
    use crate::params::RngSeed;

    #[test]
    fn posterior_examples() {
        let p0 = TgdParams::new(0.6, 0.0).unwrap();
        assert!((em_posterior(&p0, 1) - 0.48).abs() < 1e-15);
        for y in [0, 3, 30] {
            assert_eq!(em_posterior(&TgdParams::new(0.4, 1.0).unwrap(), y), 1.0);
            assert_eq!(em_posterior(&TgdParams::new(0.4, -1.0).unwrap(), y), 0.0);
        }
        // unsimplified form
        let p = TgdParams::new(0.7, 0.3).unwrap();
        let (q, a, y) = (0.7f64, 0.3f64, 4.0f64);
        let top = (1.0 + a) * (1.0 - q * q) * q.powf(2.0 * y);
        let bot = top + (1.0 - a) * (1.0 - q) * q.powf(y) * (2.0 - (1.0 + q) * q.powf(y));
        assert!((em_posterior(&p, 4) - top / bot).abs() < 1e-14);
    }

    #[test]
    fn louis_equals_observed_information() {
        let data = embedded("ntg").unwrap().table;
        for &(q, a) in &[(0.81, -0.46), (0.5, 0.3), (0.9, 0.8)] {
            let p = TgdParams::new(q, a).unwrap();
            let l = louis_info(&p, &data);
            let o = observed_info(&p, &data);
            for i in 0..2 {
                for j in 0..2 {
                    let scale = o.get(i, j).abs().max(1.0);
                    assert!((l.get(i, j) - o.get(i, j)).abs() < 1e-8 * scale, "{q} {a} {i}{j}");
                }
            }
        }
    }

    #[test]
    fn agrees_with_mle_on_ntg() {
        let data = embedded("ntg").unwrap().table;
        let em = em_fit(&data, em_default_init(&data), &EmOptions { max_iter: 5000, ..Default::default() })
            .unwrap()
            .into_converged()
            .unwrap();
        let ml = mle(&data, None).unwrap();
        assert!((em.loglik - ml.loglik).abs() < 1e-4);
        let (sq, sa) = (em.se_q.unwrap(), em.se_alpha.unwrap());
        assert!((sq / ml.se_q.unwrap() - 1.0).abs() < 0.25);
        assert!((sa / ml.se_alpha.unwrap() - 1.0).abs() < 0.25);
    }

    #[test]
    fn consistent_on_large_sample() {
        let truth = TgdParams::new(0.5, -0.75).unwrap();
        let data = FreqTable::from_samples(&truth.sample(10_000, RngSeed(11))).unwrap();
        let fit = em_fit(&data, truth, &EmOptions { max_iter: 5000, ..Default::default() }).unwrap();
        assert!(fit.result.converged);
        assert!((fit.result.params.q() - 0.5).abs() < 0.05);
        assert!((fit.result.params.alpha() + 0.75).abs() < 0.05);
    }

    #[test]
    fn all_zero_data_fails_m_step() {
        let data = FreqTable::from_counts([(0, 10)]).unwrap();
        let init = TgdParams::new(0.3, 0.1).unwrap();
        assert_eq!(
            em_fit(&data, init, &EmOptions::default()).unwrap_err(),
            TgdError::MStepBracketFailure
        );
    }
}
