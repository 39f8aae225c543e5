//! Closed-form-equation estimators: sample proportions, sample quantiles and
//! the method of moments.
//!
//! Each two-equation system is reduced to one equation in `q` by solving
//! the first equation for `alpha`, then scanned for sign changes on the
//! admissible range of `q`. When several admissible roots exist the one with
//! the smallest `|alpha|` is returned.

use crate::data::FreqTable;
use crate::error::{Result, TgdError};
use crate::estimation::optim::{levenberg_marquardt, scan_roots};
use crate::estimation::{loglik, FitResult, Method, BOX_EPS};
use crate::params::TgdParams;

const SCAN_STEPS: usize = 2000;
const XTOL: f64 = 1e-15;

/// Variant of the method of moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentVariant {
    /// Exact root of the two moment equations.
    Solve,
    /// Least-squares fit of the two moment equations over the open box.
    Minimize,
}

/// `(E[Y], E[Y^2])` under `TGD(q, alpha)`.
pub fn population_moments(q: f64, alpha: f64) -> (f64, f64) {
    let a = q / (1.0 - q);
    let b = q * q / (1.0 - q * q);
    let m1 = (1.0 - alpha) * a + alpha * b;
    let m2 = (1.0 - alpha) * (2.0 * a * a + a) + alpha * (2.0 * b * b + b);
    (m1, m2)
}

/// Moments and their Jacobian `[[dm1/dq, dm1/da], [dm2/dq, dm2/da]]`.
fn moments_jacobian(q: f64, alpha: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let a = q / (1.0 - q);
    let b = q * q / (1.0 - q * q);
    let da = 1.0 / (1.0 - q).powi(2);
    let db = 2.0 * q / (1.0 - q * q).powi(2);
    let big_a = 2.0 * a * a + a;
    let big_b = 2.0 * b * b + b;
    let m = [
        (1.0 - alpha) * a + alpha * b,
        (1.0 - alpha) * big_a + alpha * big_b,
    ];
    let jac = [
        [(1.0 - alpha) * da + alpha * db, b - a],
        [
            (1.0 - alpha) * (4.0 * a + 1.0) * da + alpha * (4.0 * b + 1.0) * db,
            big_b - big_a,
        ],
    ];
    (m, jac)
}

fn pick_root(roots: Vec<f64>, alpha_of: impl Fn(f64) -> f64, what: &str) -> Result<TgdParams> {
    roots
        .into_iter()
        .map(|q| (q, alpha_of(q)))
        .filter(|&(_, a)| a.is_finite() && (-1.0..=1.0).contains(&a))
        .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(q, a)| TgdParams::clamped(q, a, BOX_EPS))
        .ok_or_else(|| TgdError::NoSolution(format!("no admissible root for the {what} equations")))
}

fn wrap(params: TgdParams, data: &FreqTable, method: Method) -> FitResult {
    FitResult::new(params, loglik(&params, data), method, true, 0)
}

/// Solves `p0 = (1-q)(1 + alpha q)` and
/// `p1 = q(1-q)((1-alpha) + alpha q(1+q))` for `(q, alpha)`.
pub fn proportions_from(p0: f64, p1: f64) -> Result<TgdParams> {
    if !(p0 > 0.0 && p1 > 0.0 && p0 + p1 < 1.0) {
        return Err(TgdError::NoSolution(format!(
            "proportions ({p0}, {p1}) are not inside the simplex"
        )));
    }
    let alpha_of = |q: f64| (p0 - (1.0 - q)) / (q * (1.0 - q));
    let resid = |q: f64| {
        let a = alpha_of(q);
        q * (1.0 - q) * ((1.0 - a) + a * q * (1.0 + q)) - p1
    };
    let roots = scan_roots(resid, BOX_EPS, 1.0 - BOX_EPS, SCAN_STEPS, XTOL);
    pick_root(roots, alpha_of, "proportion")
}

/// Sample-proportion estimator from the relative frequencies of 0 and 1.
pub fn estimate_proportions(data: &FreqTable) -> Result<FitResult> {
    let (c0, c1) = (data.count_of(0), data.count_of(1));
    if c0 == 0 || c1 == 0 {
        return Err(TgdError::MissingCells);
    }
    let n = data.n_f64();
    let params = proportions_from(c0 as f64 / n, c1 as f64 / n)?;
    Ok(wrap(params, data, Method::Proportion))
}

/// Solves `gamma_j = 1 - (1-alpha) s_j - alpha s_j^2` with
/// `s_j = q^(t_j + 1)` for `(q, alpha)`.
pub fn quantiles_from(t1: u64, gamma1: f64, t2: u64, gamma2: f64) -> Result<TgdParams> {
    if t1 >= t2 {
        return Err(TgdError::Domain(format!("need t1 < t2, got {t1} and {t2}")));
    }
    if gamma1 == gamma2 {
        return Err(TgdError::DegenerateQuantiles);
    }
    let inside = |g: f64| g > 0.0 && g < 1.0;
    if !(inside(gamma1) && inside(gamma2) && gamma1 < gamma2) {
        return Err(TgdError::NoSolution(format!(
            "empirical CDF values ({gamma1}, {gamma2}) must be increasing inside (0, 1)"
        )));
    }
    let (e1, e2) = (t1 as f64 + 1.0, t2 as f64 + 1.0);
    let alpha_of = |q: f64| {
        let s = q.powf(e1);
        (s - (1.0 - gamma1)) / (s * (1.0 - s))
    };
    let resid = |q: f64| {
        let a = alpha_of(q);
        let s = q.powf(e2);
        s * ((1.0 - a) + a * s) - (1.0 - gamma2)
    };
    let roots = scan_roots(resid, BOX_EPS, 1.0 - BOX_EPS, SCAN_STEPS, XTOL);
    pick_root(roots, alpha_of, "quantile")
}

/// Sample-quantile estimator from the empirical CDF at `t1 < t2`.
pub fn estimate_quantiles(data: &FreqTable, t1: u64, t2: u64) -> Result<FitResult> {
    let params = quantiles_from(t1, data.ecdf(t1), t2, data.ecdf(t2))?;
    Ok(wrap(params, data, Method::Quantile))
}

/// Exact moment root for raw moments `m1`, `m2`.
pub fn moments_from(m1: f64, m2: f64) -> Result<TgdParams> {
    if !(m1 > 0.0 && m1.is_finite() && m2.is_finite() && m2 > m1 * m1) {
        return Err(TgdError::NoSolution(format!(
            "moments ({m1}, {m2}) need m1 > 0 and m2 > m1^2"
        )));
    }
    let alpha_of = |q: f64| 1.0 + q - m1 * (1.0 - q * q) / q;
    // alpha_of is increasing in q; these are the points where it equals -1 and 1
    let q_lo = (-1.0 + (1.0 + m1 * (1.0 + m1)).sqrt()) / (1.0 + m1);
    let q_hi = (m1 / (1.0 + m1)).sqrt();
    let resid = |q: f64| population_moments(q, alpha_of(q)).1 - m2;
    let (lo, hi) = (q_lo.max(BOX_EPS), q_hi.min(1.0 - BOX_EPS));
    let roots = scan_roots(resid, lo, hi, SCAN_STEPS, XTOL);
    pick_root(roots, alpha_of, "moment")
}

/// Least-squares moment fit; returns the point and whether the projected
/// gradient reached `1e-8`.
pub fn moments_min_from(m1: f64, m2: f64) -> (TgdParams, bool, usize) {
    let start = moments_from(m1, m2)
        .map(|p| [p.q(), p.alpha()])
        .unwrap_or([(m1 / (1.0 + m1)).clamp(BOX_EPS, 1.0 - BOX_EPS), 0.0]);
    let lower = [BOX_EPS, -1.0 + BOX_EPS];
    let upper = [1.0 - BOX_EPS, 1.0 - BOX_EPS];
    let fit = levenberg_marquardt(
        |x| {
            let (m, jac) = moments_jacobian(x[0], x[1]);
            ([m[0] - m1, m[1] - m2], jac)
        },
        start,
        lower,
        upper,
        1e-8,
        500,
    );
    (
        TgdParams::clamped(fit.x[0], fit.x[1], BOX_EPS),
        fit.converged,
        fit.iterations,
    )
}

/// Method-of-moments estimator using the first two raw sample moments.
pub fn estimate_moments(data: &FreqTable, variant: MomentVariant) -> Result<FitResult> {
    let (m1, m2) = (data.mean(), data.raw_moment2());
    match variant {
        MomentVariant::Solve => Ok(wrap(moments_from(m1, m2)?, data, Method::Moment)),
        MomentVariant::Minimize => {
            let (params, converged, iterations) = moments_min_from(m1, m2);
            Ok(FitResult::new(
                params,
                loglik(&params, data),
                Method::MomentMin,
                converged,
                iterations,
            ))
        }
    }
}
