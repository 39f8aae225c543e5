//! Monte-Carlo studies: estimator bias and standard errors, and the power of
//! the tests of `alpha = 0`.
//!
//! Replicate `r` of cell `c` draws its sample from `seed.derive(c, r)`, so
//! results do not depend on scheduling. Replicates run on the rayon pool and
//! are reduced in `(cell, replicate)` order.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FreqTable;
use crate::error::{Result, TgdError};
use crate::estimation::{em_default_init, em_fit, mle, EmOptions, FitResult, Method};
use crate::inference::test_battery;
use crate::params::{RngSeed, TgdParams};

fn validate_grid(q: &[f64], alpha: &[f64], n: &[usize], reps: usize) -> Result<()> {
    if q.is_empty() || alpha.is_empty() || n.is_empty() {
        return Err(TgdError::Domain("study grids must be nonempty".into()));
    }
    if reps == 0 {
        return Err(TgdError::Domain("replications must be positive".into()));
    }
    if n.iter().any(|&n| n < 2) {
        return Err(TgdError::Domain("sample sizes must be at least 2".into()));
    }
    for &qv in q {
        for &a in alpha {
            TgdParams::new(qv, a)?;
        }
    }
    Ok(())
}

fn cells(q: &[f64], alpha: &[f64], n: &[usize]) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::with_capacity(q.len() * alpha.len() * n.len());
    for &qv in q {
        for &a in alpha {
            for &nv in n {
                out.push((qv, a, nv));
            }
        }
    }
    out
}

fn simulate(params: TgdParams, n: usize, seed: RngSeed) -> Result<FreqTable> {
    FreqTable::from_samples(&params.sample(n, seed))
}

/// Design of a bias study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub q_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Drop boundary estimates from the averages as well as failures.
    #[serde(default)]
    pub exclude_boundary: bool,
    /// Iteration cap for EM fits. EM creeps slowly towards estimates near
    /// `alpha = +-1`, so the study cap is far above the [`EmOptions`] default.
    #[serde(default = "default_em_max_iter")]
    pub em_max_iter: usize,
}

/// Default EM iteration cap in bias studies.
pub const STUDY_EM_MAX_ITER: usize = 100_000;

fn default_em_max_iter() -> usize {
    STUDY_EM_MAX_ITER
}

impl BiasStudyConfig {
    /// Negative-`alpha` design: `q` in {0.25, 0.5, 0.75}, `alpha` in
    /// {-0.75, -0.30}, `n` in {25, 50, 75, 100}.
    pub fn negative_alpha(replications: usize, seed: u64) -> Self {
        Self::grid(vec![-0.75, -0.30], replications, seed)
    }

    /// Positive-`alpha` design with `alpha` in {0.30, 0.75}.
    pub fn positive_alpha(replications: usize, seed: u64) -> Self {
        Self::grid(vec![0.30, 0.75], replications, seed)
    }

    /// Both designs at 200 replications.
    pub fn desk(seed: u64) -> Self {
        Self::grid(vec![-0.75, -0.30, 0.30, 0.75], 200, seed)
    }

    fn grid(alpha_grid: Vec<f64>, replications: usize, seed: u64) -> Self {
        Self {
            q_grid: vec![0.25, 0.5, 0.75],
            alpha_grid,
            n_grid: vec![25, 50, 75, 100],
            replications,
            seed,
            methods: vec![Method::Mle, Method::Em],
            exclude_boundary: false,
            em_max_iter: STUDY_EM_MAX_ITER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.q_grid, &self.alpha_grid, &self.n_grid, self.replications)?;
        if self.methods.is_empty() || self.methods.iter().any(|m| !matches!(m, Method::Mle | Method::Em)) {
            return Err(TgdError::Domain("bias studies support the MLE and EM methods".into()));
        }
        if self.em_max_iter == 0 {
            return Err(TgdError::Domain("em_max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Aggregates for one `(q, alpha, n, method)` cell.
///
/// `se_*` is the mean of the per-replicate standard errors over the
/// replicates where one was available (`se_count`); `sd_*` is the Monte-Carlo
/// standard deviation of the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasCell {
    pub q: f64,
    pub alpha: f64,
    pub n: usize,
    pub method: Method,
    pub replications: usize,
    pub used: usize,
    pub failures: usize,
    pub boundary: usize,
    pub se_count: usize,
    pub bias_q: f64,
    pub bias_alpha: f64,
    pub se_q: f64,
    pub se_alpha: f64,
    pub sd_q: f64,
    pub sd_alpha: f64,
    pub mse_q: f64,
    pub mse_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasStudyResult {
    pub config: BiasStudyConfig,
    pub cells: Vec<BiasCell>,
}

fn fit_by(method: Method, data: &FreqTable, em_max_iter: usize) -> Result<FitResult> {
    match method {
        Method::Mle => mle(data, None),
        Method::Em => {
            let opts = EmOptions {
                max_iter: em_max_iter,
                ..EmOptions::default()
            };
            em_fit(data, em_default_init(data), &opts)?.into_converged()
        }
        _ => Err(TgdError::Domain(format!("{method:?} is not a likelihood method"))),
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

fn aggregate(
    (q, alpha, n): (f64, f64, usize),
    method: Method,
    fits: &[Result<FitResult>],
    exclude_boundary: bool,
) -> BiasCell {
    let boundary = fits.iter().filter(|f| matches!(f, Ok(r) if r.boundary)).count();
    let used: Vec<&FitResult> = fits
        .iter()
        .filter_map(|f| f.as_ref().ok())
        .filter(|r| !(exclude_boundary && r.boundary))
        .collect();
    let failures = fits.iter().filter(|f| f.is_err()).count();
    let eq = |r: &&FitResult| r.params.q() - q;
    let ea = |r: &&FitResult| r.params.alpha() - alpha;
    let bias_q = mean(used.iter().map(eq));
    let bias_alpha = mean(used.iter().map(ea));
    let sd = |e: &dyn Fn(&&FitResult) -> f64, m: f64| {
        let k = used.len();
        if k < 2 {
            return f64::NAN;
        }
        (used.iter().map(|r| (e(r) - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    };
    let with_se: Vec<&&FitResult> = used.iter().filter(|r| r.se_alpha.is_some()).collect();
    BiasCell {
        q,
        alpha,
        n,
        method,
        replications: fits.len(),
        used: used.len(),
        failures,
        boundary,
        se_count: with_se.len(),
        bias_q,
        bias_alpha,
        se_q: mean(with_se.iter().filter_map(|r| r.se_q)),
        se_alpha: mean(with_se.iter().filter_map(|r| r.se_alpha)),
        sd_q: sd(&eq, bias_q),
        sd_alpha: sd(&ea, bias_alpha),
        mse_q: mean(used.iter().map(|r| eq(r).powi(2))),
        mse_alpha: mean(used.iter().map(|r| ea(r).powi(2))),
    }
}

pub fn run_bias_study(config: &BiasStudyConfig) -> Result<BiasStudyResult> {
    config.validate()?;
    let grid = cells(&config.q_grid, &config.alpha_grid, &config.n_grid);
    let master = RngSeed(config.seed);
    let reps = config.replications;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let fits: Vec<Vec<Result<FitResult>>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (q, a, n) = grid[c];
            let seed = master.derive(c as u64, r as u64);
            match TgdParams::new(q, a).and_then(|p| simulate(p, n, seed)) {
                Ok(data) => config.methods.iter().map(|&m| fit_by(m, &data, config.em_max_iter)).collect(),
                Err(e) => config.methods.iter().map(|_| Err(e.clone())).collect(),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len() * config.methods.len());
    for (c, &cell) in grid.iter().enumerate() {
        let chunk = &fits[c * reps..(c + 1) * reps];
        for (k, &method) in config.methods.iter().enumerate() {
            let per: Vec<Result<FitResult>> = chunk.iter().map(|v| v[k].clone()).collect();
            out.push(aggregate(cell, method, &per, config.exclude_boundary));
        }
    }
    Ok(BiasStudyResult {
        config: config.clone(),
        cells: out,
    })
}

impl BiasStudyResult {
    pub const CSV_HEADER: &'static str = "q,alpha,n,method,replications,used,failures,boundary,se_count,\
bias_q,bias_alpha,se_q,se_alpha,sd_q,sd_alpha,mse_q,mse_alpha";

    pub fn cell(&self, q: f64, alpha: f64, n: usize, method: Method) -> Option<&BiasCell> {
        self.cells
            .iter()
            .find(|c| c.q == q && c.alpha == alpha && c.n == n && c.method == method)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.q,
                c.alpha,
                c.n,
                method_tag(c.method),
                c.replications,
                c.used,
                c.failures,
                c.boundary,
                c.se_count,
                c.bias_q,
                c.bias_alpha,
                c.se_q,
                c.se_alpha,
                c.sd_q,
                c.sd_alpha,
                c.mse_q,
                c.mse_alpha
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| TgdError::Io(e.to_string()))
    }
}

fn method_tag(m: Method) -> &'static str {
    match m {
        Method::Proportion => "Proportion",
        Method::Quantile => "Quantile",
        Method::Moment => "Moment",
        Method::MomentMin => "MomentMin",
        Method::Mle => "MLE",
        Method::Em => "EM",
    }
}

/// Design of a power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudyConfig {
    pub q_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
}

impl PowerStudyConfig {
    /// Effect sizes {-0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7} at
    /// `q` in {0.3, 0.45, 0.6, 0.75} and `n` in {100, 300, 500, 1000}.
    pub fn standard(replications: usize, seed: u64) -> Self {
        Self {
            q_grid: vec![0.3, 0.45, 0.6, 0.75],
            alpha_grid: vec![-0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7],
            n_grid: vec![100, 300, 500, 1000],
            replications,
            level: 0.05,
            seed,
        }
    }

    /// The standard design at 200 replications.
    pub fn desk(seed: u64) -> Self {
        Self::standard(200, seed)
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.q_grid, &self.alpha_grid, &self.n_grid, self.replications)?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(TgdError::Domain(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

/// Rejection rate of one test in one cell, over the replicates where the
/// test could be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rejection {
    pub rate: f64,
    pub rejections: usize,
    pub failures: usize,
}

impl Rejection {
    fn from_flags(flags: impl Iterator<Item = Option<bool>>) -> Self {
        let (mut rej, mut ok, mut fail) = (0, 0, 0);
        for f in flags {
            match f {
                Some(r) => {
                    ok += 1;
                    rej += usize::from(r);
                }
                None => fail += 1,
            }
        }
        let rate = if ok == 0 { f64::NAN } else { rej as f64 / ok as f64 };
        Self {
            rate,
            rejections: rej,
            failures: fail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerCell {
    pub q: f64,
    pub alpha: f64,
    pub n: usize,
    pub replications: usize,
    pub lrt: Rejection,
    /// Score test with the expected information at the null.
    pub score: Rejection,
    /// Score test with the observed information at the null.
    pub score_observed: Rejection,
    pub wald: Rejection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerStudyResult {
    pub config: PowerStudyConfig,
    pub cells: Vec<PowerCell>,
}

pub fn run_power_study(config: &PowerStudyConfig) -> Result<PowerStudyResult> {
    config.validate()?;
    let grid = cells(&config.q_grid, &config.alpha_grid, &config.n_grid);
    let master = RngSeed(config.seed);
    let reps = config.replications;
    let level = config.level;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let flags: Vec<[Option<bool>; 4]> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (q, a, n) = grid[c];
            let seed = master.derive(c as u64, r as u64);
            let Ok(data) = TgdParams::new(q, a).and_then(|p| simulate(p, n, seed)) else {
                return [None; 4];
            };
            let b = test_battery(&data);
            let f = |t: &Result<crate::inference::TestResult>| t.as_ref().ok().map(|t| t.rejects(level));
            [f(&b.lrt), f(&b.score), f(&b.score_observed), f(&b.wald)]
        })
        .collect();
    let out = grid
        .iter()
        .enumerate()
        .map(|(c, &(q, alpha, n))| {
            let chunk = &flags[c * reps..(c + 1) * reps];
            let col = |k: usize| Rejection::from_flags(chunk.iter().map(|f| f[k]));
            PowerCell {
                q,
                alpha,
                n,
                replications: reps,
                lrt: col(0),
                score: col(1),
                score_observed: col(2),
                wald: col(3),
            }
        })
        .collect();
    Ok(PowerStudyResult {
        config: config.clone(),
        cells: out,
    })
}

impl PowerStudyResult {
    pub const CSV_HEADER: &'static str = "q,alpha,n,replications,level,lrt,score,score_observed,wald,\
lrt_failures,score_failures,score_observed_failures,wald_failures";

    pub fn cell(&self, q: f64, alpha: f64, n: usize) -> Option<&PowerCell> {
        self.cells.iter().find(|c| c.q == q && c.alpha == alpha && c.n == n)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.q,
                c.alpha,
                c.n,
                c.replications,
                self.config.level,
                c.lrt.rate,
                c.score.rate,
                c.score_observed.rate,
                c.wald.rate,
                c.lrt.failures,
                c.score.failures,
                c.score_observed.failures,
                c.wald.failures
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| TgdError::Io(e.to_string()))
    }
}

/// Shape of a sequence of study values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Decreasing,
    Increasing,
    Flat,
    Mixed,
}

/// Direction a metric is expected to move along its axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Down,
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub family: String,
    pub metric: String,
    pub axis: String,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub trend: Trend,
    pub expected: Expect,
    /// A step moved against the expected direction by more than the slack.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub slack: f64,
    pub rows: Vec<TrendRow>,
}

/// Default Monte-Carlo slack for trend violations.
pub const TREND_SLACK: f64 = 0.03;

/// Classifies `values` with steps inside `slack` treated as noise.
pub fn classify_trend(values: &[f64], slack: f64) -> Trend {
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if steps.iter().all(|d| d.abs() <= 1e-12) {
        return Trend::Flat;
    }
    let first_last = values[values.len() - 1] - values[0];
    if steps.iter().all(|&d| d <= slack) && first_last < 0.0 {
        Trend::Decreasing
    } else if steps.iter().all(|&d| d >= -slack) && first_last > 0.0 {
        Trend::Increasing
    } else {
        Trend::Mixed
    }
}

fn row(family: String, metric: &str, axis: &str, pts: Vec<(f64, f64)>, expected: Expect, slack: f64) -> TrendRow {
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let violation = values.windows(2).any(|w| match expected {
        Expect::Down => w[1] - w[0] > slack,
        Expect::Up => w[0] - w[1] > slack,
    });
    TrendRow {
        family,
        metric: metric.into(),
        axis: axis.into(),
        points: pts.iter().map(|p| p.0).collect(),
        trend: classify_trend(&values, slack),
        values,
        expected,
        violation,
    }
}

/// Study output that [`trend_report`] can summarise.
pub enum StudyResult<'a> {
    Bias(&'a BiasStudyResult),
    Power(&'a PowerStudyResult),
}

/// Monotonicity verdicts: bias magnitude and standard error against `n`
/// for bias studies; power against `n` and against `|alpha|` (per sign) for
/// power studies. Families with fewer than two points are skipped.
pub fn trend_report(result: StudyResult<'_>, slack: f64) -> TrendReport {
    let mut rows = Vec::new();
    match result {
        StudyResult::Bias(r) => {
            let c = &r.config;
            for &q in &c.q_grid {
                for &a in &c.alpha_grid {
                    for &m in &c.methods {
                        let mut cells: Vec<&BiasCell> = r
                            .cells
                            .iter()
                            .filter(|x| x.q == q && x.alpha == a && x.method == m)
                            .collect();
                        if cells.len() < 2 {
                            continue;
                        }
                        cells.sort_by_key(|x| x.n);
                        let fam = format!("q={q} alpha={a} {}", method_tag(m));
                        let pts = |f: &dyn Fn(&BiasCell) -> f64| {
                            cells.iter().map(|x| (x.n as f64, f(x))).collect::<Vec<_>>()
                        };
                        rows.push(row(fam.clone(), "|bias_alpha|", "n", pts(&|x| x.bias_alpha.abs()), Expect::Down, slack));
                        rows.push(row(fam.clone(), "|bias_q|", "n", pts(&|x| x.bias_q.abs()), Expect::Down, slack));
                        rows.push(row(fam.clone(), "se_alpha", "n", pts(&|x| x.se_alpha), Expect::Down, slack));
                        rows.push(row(fam, "se_q", "n", pts(&|x| x.se_q), Expect::Down, slack));
                    }
                }
            }
        }
        StudyResult::Power(r) => {
            let c = &r.config;
            let metrics: [(&str, fn(&PowerCell) -> f64); 3] = [
                ("power_lrt", |x| x.lrt.rate),
                ("power_score", |x| x.score.rate),
                ("power_wald", |x| x.wald.rate),
            ];
            for &q in &c.q_grid {
                for &a in &c.alpha_grid {
                    let mut cells: Vec<&PowerCell> =
                        r.cells.iter().filter(|x| x.q == q && x.alpha == a).collect();
                    if cells.len() < 2 {
                        continue;
                    }
                    cells.sort_by_key(|x| x.n);
                    for (name, f) in metrics {
                        let pts = cells.iter().map(|x| (x.n as f64, f(x))).collect();
                        rows.push(row(format!("q={q} alpha={a}"), name, "n", pts, Expect::Up, slack));
                    }
                }
                for &n in &c.n_grid {
                    for sign in [-1.0, 1.0] {
                        let mut cells: Vec<&PowerCell> = r
                            .cells
                            .iter()
                            .filter(|x| x.q == q && x.n == n && (x.alpha == 0.0 || x.alpha.signum() == sign))
                            .collect();
                        if cells.len() < 2 {
                            continue;
                        }
                        cells.sort_by(|x, y| x.alpha.abs().total_cmp(&y.alpha.abs()));
                        let side = if sign < 0.0 { "alpha<=0" } else { "alpha>=0" };
                        for (name, f) in metrics {
                            let pts = cells.iter().map(|x| (x.alpha.abs(), f(x))).collect();
                            rows.push(row(format!("q={q} n={n} {side}"), name, "|alpha|", pts, Expect::Up, slack));
                        }
                    }
                }
            }
        }
    }
    TrendReport { slack, rows }
}
