//! Competing count models: the geometric null and the negative binomial.

use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::FreqTable;
use crate::error::{Result, TgdError};
use crate::estimation::optim::bfgs;
use crate::estimation::{aic, InfoMatrix, BOX_EPS};

/// Geometric fit `p_y = (1 - q) q^y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricFit {
    pub q: f64,
    pub se_q: Option<f64>,
    pub loglik: f64,
    pub aic: f64,
    /// Set when every observation is zero and `q` was clamped.
    pub boundary: bool,
}

impl GeometricFit {
    pub const FREE_PARAMS: u32 = 1;
}

/// `n ln(1 - q) + ln q sum y`.
pub fn geometric_loglik(q: f64, data: &FreqTable) -> f64 {
    data.n_f64() * (-q).ln_1p() + q.ln() * data.sum()
}

/// Closed-form geometric maximum likelihood, `q = m1 / (1 + m1)`.
pub fn fit_geometric(data: &FreqTable) -> GeometricFit {
    let m1 = data.mean();
    let raw = m1 / (1.0 + m1);
    let q = raw.clamp(BOX_EPS, 1.0 - BOX_EPS);
    let loglik = geometric_loglik(q, data);
    let boundary = raw != q;
    let se_q = (!boundary).then(|| (q * (1.0 - q).powi(2) / data.n_f64()).sqrt());
    GeometricFit {
        q,
        se_q,
        loglik,
        aic: aic(loglik, GeometricFit::FREE_PARAMS),
        boundary,
    }
}

/// Negative binomial `Gamma(y + r) / (Gamma(r) y!) (1 - p)^r p^y`, mean
/// `r p / (1 - p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegBinParams {
    r: f64,
    p: f64,
}

impl NegBinParams {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(TgdError::Domain(format!("r must be positive, got {r}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(TgdError::Domain(format!("p must lie in (0, 1), got {p}")));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        self.r * self.p / (1.0 - self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegBinFit {
    pub params: NegBinParams,
    pub se_r: Option<f64>,
    pub se_p: Option<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the data are not overdispersed or `r` ran past [`NB_R_LIMIT`].
    pub boundary: bool,
}

impl NegBinFit {
    pub const FREE_PARAMS: u32 = 2;
}

/// Estimates of `r` beyond this are reported as the Poisson limit.
pub const NB_R_LIMIT: f64 = 1e6;

/// Values below this use exact finite sums instead of gamma functions.
const EXACT_SUM_LIMIT: u64 = 256;

/// `(ln Gamma(y + r) - ln Gamma(r), d/dr of the same, d2/dr2 of the same)`.
fn rising_terms(r: f64, y: u64) -> (f64, f64, f64) {
    if y <= EXACT_SUM_LIMIT {
        let (mut l, mut d, mut d2) = (0.0, 0.0, 0.0);
        for k in 0..y {
            let rk = r + k as f64;
            l += rk.ln();
            d += 1.0 / rk;
            d2 -= 1.0 / (rk * rk);
        }
        (l, d, d2)
    } else {
        let yf = y as f64;
        let psi = |x: f64| digamma(yf + x) - digamma(x);
        // no trigamma in statrs; a central difference is accurate enough here
        let h = 1e-4 * r;
        let d2 = (psi(r + h) - psi(r - h)) / (2.0 * h);
        (ln_gamma(yf + r) - ln_gamma(r), psi(r), d2)
    }
}

fn ln_factorial(y: u64) -> f64 {
    if y <= EXACT_SUM_LIMIT {
        (2..=y).map(|k| (k as f64).ln()).sum()
    } else {
        ln_gamma(y as f64 + 1.0)
    }
}

pub fn negbin_loglik(params: &NegBinParams, data: &FreqTable) -> f64 {
    let (r, p) = (params.r, params.p);
    let mut l = data.n_f64() * r * (-p).ln_1p() + data.sum() * p.ln();
    for &(y, c) in data.entries() {
        l += c as f64 * (rising_terms(r, y).0 - ln_factorial(y));
    }
    l
}

fn negbin_score(r: f64, p: f64, data: &FreqTable) -> [f64; 2] {
    let n = data.n_f64();
    let mut dr = n * (-p).ln_1p();
    for &(y, c) in data.entries() {
        dr += c as f64 * rising_terms(r, y).1;
    }
    let dp = -n * r / (1.0 - p) + data.sum() / p;
    [dr, dp]
}

/// Negated Hessian in `(r, p)`.
pub fn negbin_observed_info(params: &NegBinParams, data: &FreqTable) -> InfoMatrix {
    let (r, p) = (params.r, params.p);
    let n = data.n_f64();
    let mut hrr = 0.0;
    for &(y, c) in data.entries() {
        hrr += c as f64 * rising_terms(r, y).2;
    }
    let hrp = -n / (1.0 - p);
    let hpp = -n * r / (1.0 - p).powi(2) - data.sum() / (p * p);
    InfoMatrix::new(-hrr, -hrp, -hpp)
}

/// Negative binomial maximum likelihood over `(ln r, logit p)`.
pub fn fit_negbin(data: &FreqTable) -> Result<NegBinFit> {
    let m1 = data.mean();
    if m1 <= 0.0 {
        return Err(TgdError::InsufficientData(
            "negative binomial needs a positive sample mean".into(),
        ));
    }
    let var = data.raw_moment2() - m1 * m1;
    let overdispersed = var > m1;
    let r0 = if overdispersed { m1 * m1 / (var - m1) } else { 100.0 };
    let p0 = m1 / (r0 + m1);
    let max_lr = NB_R_LIMIT.ln() + 2.0;
    let to_nat = |x: [f64; 2]| {
        let r = x[0].clamp(-30.0, max_lr).exp();
        let p = 1.0 / (1.0 + (-x[1].clamp(-35.0, 35.0)).exp());
        (r, p)
    };
    let m = bfgs(
        |x| {
            let (r, p) = to_nat(x);
            let Ok(np) = NegBinParams::new(r, p) else {
                return (f64::INFINITY, [0.0; 2]);
            };
            let l = negbin_loglik(&np, data);
            if !l.is_finite() {
                return (f64::INFINITY, [0.0; 2]);
            }
            let s = negbin_score(r, p, data);
            let mut g = [-s[0] * r, -s[1] * p * (1.0 - p)];
            if x[0] >= max_lr {
                g[0] = 0.0;
            }
            (-l, g)
        },
        [r0.ln(), (p0 / (1.0 - p0)).ln()],
        1e-6,
        500,
    );
    let (r, p) = to_nat(m.x);
    let params = NegBinParams::new(r, p)?;
    let loglik = negbin_loglik(&params, data);
    let boundary = !overdispersed || r > NB_R_LIMIT;
    if !m.converged && !boundary {
        return Err(TgdError::ConvergenceFailure {
            iterations: m.iterations,
        });
    }
    let se = if boundary {
        None
    } else {
        negbin_observed_info(&params, data).standard_errors().ok()
    };
    Ok(NegBinFit {
        params,
        se_r: se.map(|s| s.0),
        se_p: se.map(|s| s.1),
        loglik,
        aic: aic(loglik, NegBinFit::FREE_PARAMS),
        converged: m.converged || boundary,
        iterations: m.iterations,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded;
    use approx::assert_relative_eq;

    #[test]
    fn geometric_examples() {
        let t = FreqTable::from_counts([(0, 1), (2, 1)]).unwrap();
        assert_eq!(fit_geometric(&t).q, 0.5);
        let ntg = embedded("ntg").unwrap().table;
        let g = fit_geometric(&ntg);
        assert!((g.q - 0.8437).abs() < 1e-4);
        assert!((g.loglik + 341.14).abs() < 0.01);
        assert_eq!(g.aic, -2.0 * g.loglik + 2.0);
        let zeros = FreqTable::from_counts([(0, 4)]).unwrap();
        let z = fit_geometric(&zeros);
        assert!(z.boundary && z.q == BOX_EPS);
    }

    #[test]
    fn negbin_loglik_against_gamma_form() {
        let data = embedded("ntg").unwrap().table;
        let p = NegBinParams::new(1.3, 0.8).unwrap();
        let direct: f64 = data
            .weighted()
            .map(|(y, c)| {
                c * (ln_gamma(y + 1.3) - ln_gamma(1.3) - ln_gamma(y + 1.0)
                    + 1.3 * 0.2f64.ln()
                    + y * 0.8f64.ln())
            })
            .sum();
        assert_relative_eq!(negbin_loglik(&p, &data), direct, max_relative = 1e-12);
    }

    #[test]
    fn large_values_switch_to_gamma_functions() {
        let (r, y) = (2.5, EXACT_SUM_LIMIT + 40);
        let exact: f64 = (0..y).map(|k| (r + k as f64).ln()).sum();
        let d_exact: f64 = (0..y).map(|k| 1.0 / (r + k as f64)).sum();
        let (l, d, _) = rising_terms(r, y);
        assert_relative_eq!(l, exact, max_relative = 1e-12);
        assert_relative_eq!(d, d_exact, max_relative = 1e-10);
    }

    #[test]
    fn fits_reference_data() {
        let ntg = embedded("ntg").unwrap().table;
        let f = fit_negbin(&ntg).unwrap();
        assert!((f.params.r() - 1.336).abs() < 0.01);
        assert!((f.params.p() - 0.802).abs() < 0.01);
        assert!((f.loglik + 339.649).abs() < 0.05);
        assert!(!f.boundary);
        let dv = embedded("doctor_visit").unwrap().table;
        let f = fit_negbin(&dv).unwrap();
        assert!((f.params.r() - 0.439).abs() < 0.01);
        assert!((f.params.p() - 0.399).abs() < 0.01);
        assert!((f.loglik + 3533.28).abs() < 0.1);
    }

    #[test]
    fn underdispersed_data_hit_the_boundary() {
        let t = FreqTable::from_counts([(1, 10), (2, 12), (3, 9)]).unwrap();
        let f = fit_negbin(&t).unwrap();
        assert!(f.boundary);
        assert!(f.se_r.is_none());
    }
}
