//! Model comparison report: descriptives, TGD / geometric / negative binomial
//! fits ranked by AIC, and the tests of `alpha = 0`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::data::{describe, DescriptiveStats, FreqTable};
use crate::error::{Result, TgdError};
use crate::estimation::{aic, em_default_init, em_fit, mle, EmOptions, FitResult};
use crate::inference::{test_battery, NullInformation, TestMethod, TestResult};
use crate::models::{fit_geometric, fit_negbin, GeometricFit, NegBinFit};

/// Which models to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSet {
    pub tgd_mle: bool,
    pub tgd_em: bool,
    pub geometric: bool,
    pub negbin: bool,
    pub tests: bool,
}

impl ModelSet {
    pub fn all() -> Self {
        Self {
            tgd_mle: true,
            tgd_em: true,
            geometric: true,
            negbin: true,
            tests: true,
        }
    }

    pub fn geometric_only() -> Self {
        Self {
            tgd_mle: false,
            tgd_em: false,
            geometric: true,
            negbin: false,
            tests: false,
        }
    }

    fn is_empty(&self) -> bool {
        !(self.tgd_mle || self.tgd_em || self.geometric || self.negbin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    #[serde(rename = "TGD")]
    Tgd,
    Geometric,
    #[serde(rename = "NB")]
    NegBin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: &'static str,
    pub value: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: ModelKind,
    pub method: &'static str,
    pub estimates: Vec<Estimate>,
    pub loglik: Option<f64>,
    pub free_params: u32,
    pub aic: Option<f64>,
    pub converged: bool,
    pub boundary: bool,
    pub best: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub failure: Option<TgdError>,
}

impl ModelRow {
    fn new(model: ModelKind, method: &'static str, k: u32) -> Self {
        Self {
            model,
            method,
            estimates: Vec::new(),
            loglik: None,
            free_params: k,
            aic: None,
            converged: false,
            boundary: false,
            best: false,
            error: None,
            failure: None,
        }
    }

    fn with_loglik(mut self, ll: f64) -> Self {
        self.loglik = Some(ll);
        self.aic = Some(aic(ll, self.free_params));
        self
    }

    fn failed(mut self, e: &TgdError) -> Self {
        self.error = Some(e.to_string());
        self.failure = Some(e.clone());
        self
    }

    fn from_tgd(method: &'static str, fit: Result<FitResult>) -> Self {
        let row = Self::new(ModelKind::Tgd, method, FitResult::FREE_PARAMS);
        match fit {
            Ok(f) => {
                let mut row = row.with_loglik(f.loglik);
                row.estimates = vec![
                    Estimate { name: "q", value: f.params.q(), se: f.se_q },
                    Estimate { name: "alpha", value: f.params.alpha(), se: f.se_alpha },
                ];
                row.converged = f.converged;
                row.boundary = f.boundary;
                row
            }
            Err(e) => row.failed(&e),
        }
    }

    fn from_geometric(g: GeometricFit) -> Self {
        let mut row = Self::new(ModelKind::Geometric, "closed form", GeometricFit::FREE_PARAMS).with_loglik(g.loglik);
        row.estimates = vec![Estimate { name: "q", value: g.q, se: g.se_q }];
        row.converged = true;
        row.boundary = g.boundary;
        row
    }

    fn from_negbin(fit: Result<NegBinFit>) -> Self {
        let row = Self::new(ModelKind::NegBin, "MLE", NegBinFit::FREE_PARAMS);
        match fit {
            Ok(f) => {
                let mut row = row.with_loglik(f.loglik);
                row.estimates = vec![
                    Estimate { name: "r", value: f.params.r(), se: f.se_r },
                    Estimate { name: "p", value: f.params.p(), se: f.se_p },
                ];
                row.converged = f.converged;
                row.boundary = f.boundary;
                row
            }
            Err(e) => row.failed(&e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRow {
    pub test: TestMethod,
    /// Information matrix used, for the score test.
    pub information: Option<NullInformation>,
    pub statistic: Option<f64>,
    pub df: u32,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

impl TestRow {
    fn from(test: TestMethod, information: Option<NullInformation>, r: &Result<TestResult>) -> Self {
        match r {
            Ok(t) => Self {
                test,
                information,
                statistic: Some(t.statistic),
                df: t.df,
                p_value: Some(t.p_value),
                error: None,
            },
            Err(e) => Self {
                test,
                information,
                statistic: None,
                df: 1,
                p_value: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub descriptives: DescriptiveStats,
    pub models: Vec<ModelRow>,
    /// Index into `models` of the minimum-AIC row, when more than one
    /// model family was fitted.
    pub best_model: Option<usize>,
    pub tests: Vec<TestRow>,
}

/// Fits the requested models and tests on `data`.
pub fn compare(name: &str, data: &FreqTable, set: &ModelSet) -> Result<ComparisonReport> {
    if set.is_empty() {
        return Err(TgdError::Domain("no models requested".into()));
    }
    let mut models = Vec::new();
    if set.tgd_mle {
        models.push(ModelRow::from_tgd("MLE", mle(data, None)));
    }
    if set.tgd_em {
        let em = em_fit(data, em_default_init(data), &EmOptions { max_iter: 10_000, ..Default::default() })
            .and_then(|f| f.into_converged());
        models.push(ModelRow::from_tgd("EM", em));
    }
    if set.geometric {
        models.push(ModelRow::from_geometric(fit_geometric(data)));
    }
    if set.negbin {
        models.push(ModelRow::from_negbin(fit_negbin(data)));
    }
    let families = {
        let mut k: Vec<ModelKind> = models.iter().map(|m| m.model).collect();
        k.dedup();
        k.len()
    };
    let best_model = if families > 1 {
        models
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.aic.map(|a| (i, a)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
    } else {
        None
    };
    if let Some(i) = best_model {
        // a tie between the two TGD fitting methods flags both
        let best_aic = models[i].aic;
        let kind = models[i].model;
        for m in models.iter_mut() {
            if m.model == kind && m.aic.zip(best_aic).is_some_and(|(a, b)| (a - b).abs() < 1e-6) {
                m.best = true;
            }
        }
    }
    let tests = if set.tests {
        let b = test_battery(data);
        vec![
            TestRow::from(TestMethod::Lrt, None, &b.lrt),
            TestRow::from(TestMethod::Score, Some(NullInformation::Expected), &b.score),
            TestRow::from(TestMethod::Score, Some(NullInformation::Observed), &b.score_observed),
            TestRow::from(TestMethod::Wald, None, &b.wald),
        ]
    } else {
        Vec::new()
    };
    Ok(ComparisonReport {
        dataset: name.to_string(),
        descriptives: describe(data),
        models,
        best_model,
        tests,
    })
}

/// Rounds `x` to six significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round6(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serialises any value with keys sorted and floats at six significant
/// digits, so identical inputs give byte-identical output.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| TgdError::Io(e.to_string()))?;
    round_floats(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| TgdError::Io(e.to_string()))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{}", round6(v))).unwrap_or_else(|| "-".into())
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        canonical_json(self)
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let d = &self.descriptives;
        let mut s = String::new();
        let _ = writeln!(s, "dataset: {}", self.dataset);
        let _ = writeln!(
            s,
            "n = {}  mean = {}  variance = {}  dispersion = {}  max = {}",
            d.n,
            round6(d.mean),
            round6(d.variance),
            round6(d.index_of_dispersion),
            d.max
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<10} {:<12} {:<34} {:>14} {:>14}  {}",
            "model", "method", "estimates (se)", "loglik", "aic", "flags"
        );
        for m in &self.models {
            let est = m
                .estimates
                .iter()
                .map(|e| match e.se {
                    Some(se) => format!("{}={} ({})", e.name, round6(e.value), round6(se)),
                    None => format!("{}={}", e.name, round6(e.value)),
                })
                .collect::<Vec<_>>()
                .join(" ");
            let mut flags = Vec::new();
            if m.best {
                flags.push("best".to_string());
            }
            if m.boundary {
                flags.push("boundary".into());
            }
            if let Some(e) = &m.error {
                flags.push(format!("error: {e}"));
            }
            let kind = match m.model {
                ModelKind::Tgd => "TGD",
                ModelKind::Geometric => "Geometric",
                ModelKind::NegBin => "NB",
            };
            let _ = writeln!(
                s,
                "{:<10} {:<12} {:<34} {:>14} {:>14}  {}",
                kind,
                m.method,
                est,
                fmt_opt(m.loglik),
                fmt_opt(m.aic),
                flags.join(", ")
            );
        }
        if !self.tests.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "{:<16} {:>14} {:>4} {:>14}", "test", "statistic", "df", "p-value");
            for t in &self.tests {
                let name = match (t.test, t.information) {
                    (TestMethod::Lrt, _) => "LRT".to_string(),
                    (TestMethod::Wald, _) => "Wald".to_string(),
                    (TestMethod::Score, Some(NullInformation::Observed)) => "Score (obs)".to_string(),
                    (TestMethod::Score, _) => "Score".to_string(),
                };
                let tail = t.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{:<16} {:>14} {:>4} {:>14}{}",
                    name,
                    fmt_opt(t.statistic),
                    t.df,
                    fmt_opt(t.p_value),
                    tail
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded;

    #[test]
    fn rounding() {
        assert_eq!(round6(682.7076179), 682.708);
        assert_eq!(round6(-0.000123456789), -0.000123457);
        assert_eq!(round6(0.0), 0.0);
    }

    #[test]
    fn ntg_report_flags_tgd() {
        let data = embedded("ntg").unwrap().table;
        let r = compare("ntg", &data, &ModelSet::all()).unwrap();
        let best = &r.models[r.best_model.unwrap()];
        assert_eq!(best.model, ModelKind::Tgd);
        for m in &r.models {
            if let (Some(ll), Some(a)) = (m.loglik, m.aic) {
                assert!((a - (-2.0 * ll + 2.0 * f64::from(m.free_params))).abs() < 1e-9);
            }
        }
        assert_eq!(r.tests.len(), 4);
        let text = r.to_text();
        assert!(text.contains("best"));
    }

    #[test]
    fn geometric_only_has_no_best() {
        let data = embedded("doctor_visit").unwrap().table;
        let r = compare("doctor_visit", &data, &ModelSet::geometric_only()).unwrap();
        assert_eq!(r.models.len(), 1);
        assert_eq!(r.best_model, None);
        assert!(!r.models[0].best);
    }

    #[test]
    fn json_is_deterministic() {
        let data = embedded("ntg").unwrap().table;
        let a = compare("ntg", &data, &ModelSet::all()).unwrap().to_json().unwrap();
        let b = compare("ntg", &data, &ModelSet::all()).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert!(v["models"].is_array());
    }
}
