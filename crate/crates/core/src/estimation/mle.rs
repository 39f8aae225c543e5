//! Direct maximum likelihood by multi-start BFGS on `(logit q, atanh alpha)`.

use crate::data::FreqTable;
use crate::error::{Result, TgdError};
use crate::estimation::optim::{bfgs, Minimum};
use crate::estimation::simple::moments_from;
use crate::estimation::{
    loglik, observed_info, score, FitResult, Method, BOUNDARY_FLAG, BOX_EPS,
};
use crate::params::TgdParams;

const U_LIMIT: f64 = 35.0;
const V_LIMIT: f64 = 18.0;

/// Optimizer settings for [`mle_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    /// Gradient-norm tolerance in the transformed space.
    pub gtol: f64,
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Include the method-of-moments estimate as a start.
    pub moment_start: bool,
    /// Fixed start grid in the natural parameters.
    pub grid: Vec<(f64, f64)>,
}

impl Default for MleOptions {
    fn default() -> Self {
        let mut grid = Vec::with_capacity(9);
        for q in [0.2, 0.5, 0.8] {
            for a in [-0.5, 0.0, 0.5] {
                grid.push((q, a));
            }
        }
        Self {
            gtol: 1e-6,
            max_iter: 500,
            moment_start: true,
            grid,
        }
    }
}

fn to_natural(x: [f64; 2]) -> (f64, f64) {
    let u = x[0].clamp(-U_LIMIT, U_LIMIT);
    let v = x[1].clamp(-V_LIMIT, V_LIMIT);
    (1.0 / (1.0 + (-u).exp()), v.tanh())
}

fn to_transformed(q: f64, alpha: f64) -> [f64; 2] {
    let q = q.clamp(BOX_EPS, 1.0 - BOX_EPS);
    let a = alpha.clamp(-1.0 + BOX_EPS, 1.0 - BOX_EPS);
    [(q / (1.0 - q)).ln(), a.atanh()]
}

/// Negative log-likelihood and its gradient in the transformed space.
fn objective(data: &FreqTable, x: [f64; 2]) -> (f64, [f64; 2]) {
    let (q, a) = to_natural(x);
    let Ok(p) = TgdParams::new(q, a) else {
        return (f64::INFINITY, [0.0; 2]);
    };
    let l = loglik(&p, data);
    if !l.is_finite() {
        return (f64::INFINITY, [0.0; 2]);
    }
    let s = score(&p, data);
    let mut gu = -s[0] * q * (1.0 - q);
    let mut gv = -s[1] * (1.0 - a * a);
    // no movement is possible past the clamps
    if x[0].abs() >= U_LIMIT {
        gu = 0.0;
    }
    if x[1].abs() >= V_LIMIT {
        gv = 0.0;
    }
    (-l, [gu, gv])
}

fn run_start(data: &FreqTable, start: [f64; 2], opts: &MleOptions) -> Minimum {
    bfgs(|x| objective(data, x), start, opts.gtol, opts.max_iter)
}

fn finish(data: &FreqTable, m: Minimum) -> FitResult {
    let (q, a) = to_natural(m.x);
    let params = TgdParams::clamped(q, a, BOX_EPS);
    let fit = FitResult::new(params, loglik(&params, data), Method::Mle, m.converged, m.iterations);
    let se = if params.boundary_distance() >= BOUNDARY_FLAG {
        observed_info(&params, data).standard_errors().ok()
    } else {
        None
    };
    fit.with_se(se)
}

fn check_data(data: &FreqTable) -> Result<()> {
    if data.distinct_values() < 2 {
        return Err(TgdError::InsufficientData(
            "maximum likelihood needs at least two distinct values".into(),
        ));
    }
    Ok(())
}

/// Maximum likelihood estimate with default options.
pub fn mle(data: &FreqTable, init: Option<TgdParams>) -> Result<FitResult> {
    mle_with(data, init, &MleOptions::default())
}

/// Multi-start maximum likelihood. Starts are `init` (if given), the moment
/// estimate (if it exists) and the configured grid; the converged start with
/// the largest log-likelihood wins.
pub fn mle_with(data: &FreqTable, init: Option<TgdParams>, opts: &MleOptions) -> Result<FitResult> {
    check_data(data)?;
    let mut starts = Vec::with_capacity(opts.grid.len() + 2);
    if let Some(p) = init {
        starts.push(to_transformed(p.q(), p.alpha()));
    }
    if opts.moment_start {
        if let Ok(p) = moments_from(data.mean(), data.raw_moment2()) {
            starts.push(to_transformed(p.q(), p.alpha()));
        }
    }
    starts.extend(opts.grid.iter().map(|&(q, a)| to_transformed(q, a)));

    let mut best: Option<Minimum> = None;
    let mut total = 0;
    for s in starts {
        let m = run_start(data, s, opts);
        total += m.iterations;
        let better = match &best {
            None => true,
            Some(b) => match (m.converged, b.converged) {
                (true, false) => true,
                (false, true) => false,
                _ => m.value < b.value,
            },
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.ok_or(TgdError::ConvergenceFailure { iterations: 0 })?;
    if !best.converged {
        return Err(TgdError::ConvergenceFailure { iterations: total });
    }
    Ok(finish(data, best))
}

/// Single-start maximum likelihood from `start`. This is the local maximum
/// reached by ascending from `start`, not necessarily the global one.
pub fn mle_local(data: &FreqTable, start: TgdParams) -> Result<FitResult> {
    check_data(data)?;
    let opts = MleOptions::default();
    let m = run_start(data, to_transformed(start.q(), start.alpha()), &opts);
    if !m.converged {
        return Err(TgdError::ConvergenceFailure { iterations: m.iterations });
    }
    Ok(finish(data, m))
}
