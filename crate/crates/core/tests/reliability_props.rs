use tgd::reliability::HazardClass;
use tgd::TgdParams;

const QS: [f64; 6] = [0.1, 0.3, 0.5, 0.7, 0.85, 0.95];
const ALPHAS: [f64; 11] = [-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
const HORIZON: u64 = 200;

fn grid() -> impl Iterator<Item = TgdParams> {
    QS.into_iter()
        .flat_map(|q| ALPHAS.into_iter().map(move |a| TgdParams::new(q, a).unwrap()))
}

fn geometric(q: f64) -> TgdParams {
    TgdParams::geometric(q).unwrap()
}

#[test]
fn hazard_direction_follows_alpha() {
    let mut violations = Vec::new();
    for p in grid() {
        let expect = p.classify_hazard();
        for y in 0..HORIZON {
            let d = p.hazard(y + 1) - p.hazard(y);
            let ok = match expect {
                HazardClass::Increasing => d >= -1e-15,
                HazardClass::Decreasing => d <= 1e-15,
                HazardClass::Constant => d.abs() <= 1e-14,
            };
            if !ok {
                violations.push((p, y, d));
            }
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn hazard_scan_agrees_with_classification() {
    for p in grid() {
        let scanned = p.scan_hazard(HORIZON, 1e-13);
        assert_eq!(scanned, Some(p.classify_hazard()), "{p:?}");
    }
}

#[test]
fn hazard_classes_at_named_points() {
    let class = |q, a| TgdParams::new(q, a).unwrap().classify_hazard();
    assert_eq!(class(0.5, -0.3), HazardClass::Increasing);
    assert_eq!(class(0.5, 0.3), HazardClass::Decreasing);
    assert_eq!(class(0.5, 0.0), HazardClass::Constant);
    assert_eq!(class(0.5, 1.0), HazardClass::Constant);
    assert_eq!(class(0.5, -1.0), HazardClass::Increasing);
    let p = TgdParams::new(0.5, 1.0).unwrap();
    for y in 0..20 {
        assert!((p.hazard(y) - 0.75).abs() < 1e-15);
    }
}

#[test]
fn mrl_direction_and_closed_form_increment() {
    let mut violations = 0;
    for p in grid() {
        let (q, a) = (p.q(), p.alpha());
        for y in 0..HORIZON {
            let inc = p.mrl(y + 1) - p.mrl(y);
            let yi = y as i32;
            let closed = (1.0 - a) * a * q.powi(yi + 1)
                / ((1.0 + q) * (1.0 - a * (1.0 - q.powi(yi))) * (1.0 - a * (1.0 - q.powi(yi + 1))));
            if (p.mrl_increment(y) - closed).abs() > 1e-10 || (inc - closed).abs() > 1e-10 {
                violations += 1;
            }
            let signed_ok = if a > 0.0 && a < 1.0 {
                inc >= -1e-12
            } else if a < 0.0 {
                inc <= 1e-12
            } else {
                inc.abs() <= 1e-12
            };
            if !signed_ok {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn mrl_matches_direct_sum() {
    let p = TgdParams::new(0.6, -0.5).unwrap();
    for y in [0u64, 3, 10] {
        let s: f64 = (y..3000).map(|k| (k - y) as f64 * p.pmf(k)).sum();
        assert!((p.mrl(y) - s / p.sf(y)).abs() < 1e-10);
    }
}

#[test]
fn second_and_reversed_hazard_definitions() {
    for p in grid() {
        for y in 0..40u64 {
            let second = (p.sf(y) / p.sf(y + 1)).ln();
            assert!((p.second_hazard(y) - second).abs() < 1e-10 * second.abs().max(1.0));
            let rev = p.pmf(y) / p.cdf(y as i64);
            assert!((p.reversed_hazard(y) - rev).abs() < 1e-10 * rev.max(1.0));
        }
        assert_eq!(p.reversed_hazard(0), 1.0);
    }
}

#[test]
fn likelihood_ratio_against_geometric() {
    for p in grid() {
        let g = geometric(p.q());
        let mut prev = None;
        for z in 0..HORIZON / 2 {
            let direct = p.pmf(z) / g.pmf(z);
            let r = p.geometric_likelihood_ratio(z);
            let closed = 1.0 + p.alpha() * ((1.0 + p.q()) * p.q().powi(z as i32) - 1.0);
            assert!((r - closed).abs() <= 1e-13);
            if g.pmf(z) > 1e-250 {
                assert!((r - direct).abs() < 1e-9 * r.max(1.0));
            }
            if let Some(last) = prev {
                let d: f64 = r - last;
                assert!(d * p.alpha() <= 0.0, "{p:?} z={z}");
            }
            prev = Some(r);
        }
    }
}

#[test]
fn stochastic_hazard_and_reversed_hazard_orders() {
    // alpha < 0 puts the TGD above the geometric in every order, alpha > 0 below
    let mut violations = 0;
    for p in grid() {
        let g = geometric(p.q());
        let s = p.alpha().signum();
        for z in 0..HORIZON {
            let tol = 1e-14;
            if s * (p.sf(z) - g.sf(z)) > tol {
                violations += 1;
            }
            if s * (g.hazard(z) - p.hazard(z)) > tol {
                violations += 1;
            }
            if s * (p.reversed_hazard(z) - g.reversed_hazard(z)) > tol {
                violations += 1;
            }
        }
        if s * (p.mean() - g.mean()) > 1e-12 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn survival_increases_with_q() {
    let mut violations = 0;
    for a in ALPHAS {
        for (i, &q1) in QS.iter().enumerate() {
            for &q2 in &QS[i..] {
                let (p1, p2) = (TgdParams::new(q1, a).unwrap(), TgdParams::new(q2, a).unwrap());
                for y in 0..HORIZON {
                    if p1.sf(y) > p2.sf(y) {
                        violations += 1;
                    }
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn reliability_table_rows() {
    let p = TgdParams::new(0.5, -0.5).unwrap();
    let rows = p.reliability_table(3);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].y, 0);
    assert_eq!(rows[0].pmf, 0.375);
    assert_eq!(rows[2].hazard, p.hazard(2));
}
