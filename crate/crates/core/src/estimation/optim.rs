//! Small numerical workhorses: 2-D BFGS with backtracking, bracketed 1-D
//! root finding and a bounded Levenberg-Marquardt for two residuals.

/// Result of an unconstrained 2-D minimisation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(h: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

/// Minimises `f` with BFGS. `f` returns the value and gradient; non-finite
/// values are treated as outside the domain and rejected by the line search.
pub(crate) fn bfgs<F>(mut f: F, x0: [f64; 2], gtol: f64, max_iter: usize) -> Minimum
where
    F: FnMut([f64; 2]) -> (f64, [f64; 2]),
{
    let mut x = x0;
    let (mut fx, mut g) = f(x);
    let mut h = IDENTITY;
    let mut iterations = 0;
    while iterations < max_iter {
        if norm(g) < gtol {
            break;
        }
        iterations += 1;
        let mut d = mat_vec(&h, g);
        d = [-d[0], -d[1]];
        let mut slope = dot(g, d);
        if !(slope < 0.0) {
            h = IDENTITY;
            d = [-g[0], -g[1]];
            slope = -dot(g, g);
        }
        // scale the first step so it moves at most one unit
        let mut step = if iterations == 1 { (1.0 / norm(d)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn = [x[0] + step * d[0], x[1] + step * d[1]];
            let (fn_, gn) = f(xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if h == IDENTITY {
                break;
            }
            h = IDENTITY;
            continue;
        };
        let s = [xn[0] - x[0], xn[1] - x[1]];
        let y = [gn[0] - g[0], gn[1] - g[1]];
        let sy = dot(s, y);
        if sy > 1e-14 * norm(s) * norm(y) {
            let rho = 1.0 / sy;
            let hy = mat_vec(&h, y);
            let yhy = dot(y, hy);
            let mut hn = h;
            for i in 0..2 {
                for j in 0..2 {
                    hn[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            h = hn;
        }
        let stalled = (fx - fn_).abs() <= 1e-16 * fx.abs().max(1.0) && norm(s) < 1e-14;
        x = xn;
        fx = fn_;
        g = gn;
        if stalled {
            break;
        }
    }
    let grad_norm = norm(g);
    Minimum {
        x,
        value: fx,
        iterations,
        converged: grad_norm < gtol,
    }
}

/// Brent's method on `[a, b]`; requires a sign change.
pub(crate) fn brent<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(b)
}

/// All roots of `f` on `[lo, hi]` located by scanning `steps` sub-intervals
/// for sign changes and polishing each with Brent.
pub(crate) fn scan_roots<F>(mut f: F, lo: f64, hi: f64, steps: usize, xtol: f64) -> Vec<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut roots = Vec::new();
    let h = (hi - lo) / steps as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=steps {
        let x1 = if i == steps { hi } else { lo + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() && f1 != 0.0 {
            if let Some(r) = brent(&mut f, x0, x1, xtol) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

/// Least squares for two residuals on a box, by Levenberg-Marquardt with
/// projection onto the box. `rj` returns residuals and the Jacobian
/// (`jac[i][j] = d r_i / d x_j`).
pub(crate) fn levenberg_marquardt<F>(
    mut rj: F,
    x0: [f64; 2],
    lower: [f64; 2],
    upper: [f64; 2],
    gtol: f64,
    max_iter: usize,
) -> Minimum
where
    F: FnMut([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
{
    let clamp = |x: [f64; 2]| {
        [
            x[0].clamp(lower[0], upper[0]),
            x[1].clamp(lower[1], upper[1]),
        ]
    };
    let mut x = clamp(x0);
    let (mut r, mut j) = rj(x);
    let mut cost = dot(r, r);
    let mut lambda = 1e-3;
    let grad = |r: [f64; 2], j: &[[f64; 2]; 2]| {
        [
            2.0 * (j[0][0] * r[0] + j[1][0] * r[1]),
            2.0 * (j[0][1] * r[0] + j[1][1] * r[1]),
        ]
    };
    // gradient with components pointing out of an active bound removed
    let projected = |x: [f64; 2], g: [f64; 2]| {
        let mut p = g;
        for i in 0..2 {
            if (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0) {
                p[i] = 0.0;
            }
        }
        p
    };
    let mut g = grad(r, &j);
    let mut iterations = 0;
    while iterations < max_iter && norm(projected(x, g)) >= gtol && cost > 0.0 {
        iterations += 1;
        // normal equations (J^T J + lambda diag) d = -J^T r
        let a00 = j[0][0] * j[0][0] + j[1][0] * j[1][0];
        let a01 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let a11 = j[0][1] * j[0][1] + j[1][1] * j[1][1];
        let b = [-g[0] / 2.0, -g[1] / 2.0];
        let mut improved = false;
        for _ in 0..40 {
            let m00 = a00 * (1.0 + lambda) + 1e-300;
            let m11 = a11 * (1.0 + lambda) + 1e-300;
            let det = m00 * m11 - a01 * a01;
            let d = [(m11 * b[0] - a01 * b[1]) / det, (m00 * b[1] - a01 * b[0]) / det];
            let xn = clamp([x[0] + d[0], x[1] + d[1]]);
            let (rn, jn) = rj(xn);
            let cn = dot(rn, rn);
            if cn.is_finite() && cn < cost {
                x = xn;
                r = rn;
                j = jn;
                cost = cn;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        g = grad(r, &j);
        if !improved {
            break;
        }
    }
    let grad_norm = norm(projected(x, g));
    Minimum {
        x,
        value: cost,
        iterations,
        converged: grad_norm < gtol || cost == 0.0,
    }
}
