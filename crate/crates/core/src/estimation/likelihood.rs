use crate::data::FreqTable;
use crate::distribution::qpow;
use crate::estimation::InfoMatrix;
use crate::params::TgdParams;

/// Per-value pieces of the log-likelihood: `g = (1 + q) q^y` and its first
/// two derivatives in `q`.
struct Terms {
    g: f64,
    dg: f64,
    d2g: f64,
}

impl Terms {
    #[inline]
    fn at(q: f64, y: f64) -> Self {
        let t = qpow(q, y);
        let g = (1.0 + q) * t;
        let dg = t + (1.0 + q) * y * t / q;
        let d2g = 2.0 * y * t / q + (1.0 + q) * y * (y - 1.0) * t / (q * q);
        Self { g, dg, d2g }
    }
}

/// `n ln(1 - q) + ln q sum y_i + sum ln((1 - alpha) + alpha q^y_i (1 + q))`.
///
/// Returns `-inf` if any observed value has zero probability.
pub fn loglik(params: &TgdParams, data: &FreqTable) -> f64 {
    let q = params.q();
    let a = params.alpha();
    let base = data.n_f64() * (-q).ln_1p() + q.ln() * data.sum();
    let mut acc = 0.0;
    for (y, c) in data.weighted() {
        let d = (1.0 - a) + a * (1.0 + q) * qpow(q, y);
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += c * d.ln();
    }
    base + acc
}

/// Score vector `(dl/dq, dl/dalpha)`.
pub fn score(params: &TgdParams, data: &FreqTable) -> [f64; 2] {
    let q = params.q();
    let a = params.alpha();
    let mut dq = -data.n_f64() / (1.0 - q) + data.sum() / q;
    let mut da = 0.0;
    for (y, c) in data.weighted() {
        let t = Terms::at(q, y);
        let d = 1.0 - a + a * t.g;
        dq += c * a * t.dg / d;
        da += c * (t.g - 1.0) / d;
    }
    [dq, da]
}

/// Negated Hessian of the log-likelihood.
pub fn observed_info(params: &TgdParams, data: &FreqTable) -> InfoMatrix {
    let q = params.q();
    let a = params.alpha();
    let mut hqq = -data.n_f64() / (1.0 - q).powi(2) - data.sum() / (q * q);
    let mut hqa = 0.0;
    let mut haa = 0.0;
    for (y, c) in data.weighted() {
        let t = Terms::at(q, y);
        let d = 1.0 - a + a * t.g;
        let r = a * t.dg / d;
        hqq += c * (a * t.d2g / d - r * r);
        hqa += c * (t.dg / d - r * (t.g - 1.0) / d);
        haa -= c * ((t.g - 1.0) / d).powi(2);
    }
    InfoMatrix::new(-hqq, -hqa, -haa)
}

/// Expected (Fisher) information of `n` observations at `(q, alpha = 0)`.
///
/// Closed forms of `E[-d^2 l]` under the geometric law:
/// `n / (q (1 - q)^2)`, `-n / (1 - q^2)` and
/// `n ((1 + q)^2 (1 - q) / (1 - q^3) - 1)`.
pub fn expected_info_null(q: f64, n: f64) -> InfoMatrix {
    let iqq = n / (q * (1.0 - q).powi(2));
    let iqa = -n / (1.0 - q * q);
    let iaa = n * ((1.0 + q).powi(2) * (1.0 - q) / (1.0 - q.powi(3)) - 1.0);
    InfoMatrix::new(iqq, iqa, iaa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded;
    use approx::assert_relative_eq;

    fn p(q: f64, a: f64) -> TgdParams {
        TgdParams::new(q, a).unwrap()
    }

    #[test]
    fn loglik_matches_sum_of_log_pmf() {
        let data = embedded("ntg").unwrap().table;
        let d = p(0.8, -0.4);
        let direct: f64 = data.weighted().map(|(y, c)| c * d.log_pmf(y as u64)).sum();
        assert_relative_eq!(loglik(&d, &data), direct, max_relative = 1e-12);
    }

    #[test]
    fn loglik_geometric_reduction() {
        let data = embedded("doctor_visit").unwrap().table;
        let q: f64 = 0.3;
        let geo = data.n_f64() * (1.0 - q).ln() + q.ln() * data.sum();
        assert_relative_eq!(loglik(&p(q, 0.0), &data), geo, max_relative = 1e-13);
    }

    #[test]
    fn score_alpha_at_null() {
        let data = embedded("ntg").unwrap().table;
        let q: f64 = 0.77;
        let expect: f64 = data
            .weighted()
            .map(|(y, c)| c * ((1.0 + q) * q.powf(y) - 1.0))
            .sum();
        assert_relative_eq!(score(&p(q, 0.0), &data)[1], expect, max_relative = 1e-12);
    }

    #[test]
    fn info_alpha_alpha_at_null() {
        let data = embedded("ntg").unwrap().table;
        let q: f64 = 0.77;
        let expect: f64 = data
            .weighted()
            .map(|(y, c)| c * ((1.0 + q) * q.powf(y) - 1.0).powi(2))
            .sum();
        let info = observed_info(&p(q, 0.0), &data);
        assert_relative_eq!(info.get(1, 1), expect, max_relative = 1e-12);
        assert_eq!(info.get(0, 1), info.get(1, 0));
    }

    #[test]
    fn expected_info_matches_series() {
        for &q in &[0.2, 0.5, 0.85] {
            let d = p(q, 0.0);
            // expectation of the observed information over a truncated support
            let mut support = Vec::new();
            let mut y = 0u64;
            while d.sf(y) > 1e-17 {
                support.push((y, d.pmf(y)));
                y += 1;
            }
            let (mut iqq, mut iqa, mut iaa) = (0.0, 0.0, 0.0);
            for (y, w) in support {
                let one = crate::data::FreqTable::from_counts([(y, 1), (y, 1)]).unwrap();
                let i = observed_info(&d, &one);
                iqq += w * i.get(0, 0) / 2.0;
                iqa += w * i.get(0, 1) / 2.0;
                iaa += w * i.get(1, 1) / 2.0;
            }
            let e = expected_info_null(q, 1.0);
            assert_relative_eq!(e.get(0, 0), iqq, max_relative = 1e-9);
            assert_relative_eq!(e.get(0, 1), iqa, max_relative = 1e-9);
            assert_relative_eq!(e.get(1, 1), iaa, max_relative = 1e-9);
        }
    }
}
