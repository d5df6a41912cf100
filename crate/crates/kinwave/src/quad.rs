//! Adaptive Gauss-Kronrod quadrature and bracketing root finders.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 2000,
        }
    }
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Input(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Input("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        QuadSettings {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod rule with the QUADPACK error heuristic.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * h;
    resabs *= h.abs();
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let uflow = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > uflow {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration over consecutive breakpoints `pts` (sorted, at least two).
pub fn integrate_pts<F: Fn(f64) -> f64>(f: &F, pts: &[f64], s: &QuadSettings) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            evals += 15;
            total += v;
            err += e;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
    }
    let mut n = heap.len();
    while err > s.abs_tol.max(s.rel_tol * total.abs()) && n < s.max_subdivisions {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Piece {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        n += 1;
    }
    // Re-sum to shed accumulated update rounding.
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    QuadResult {
        value,
        error,
        evals,
        converged: error <= s.abs_tol.max(s.rel_tol * value.abs()),
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, s: &QuadSettings) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
            converged: true,
        };
    }
    if b < a {
        let mut r = integrate_pts(f, &[b, a], s);
        r.value = -r.value;
        return r;
    }
    integrate_pts(f, &[a, b], s)
}

/// Integral over [a, b] where the integrand may behave like a square root (or its inverse)
/// at the flagged ends; u = a + t^2 (resp. u = b - t^2) smooths those ends.
pub fn integrate_sqrt_ends<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    left: bool,
    right: bool,
    s: &QuadSettings,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    match (left, right) {
        (false, false) => integrate(f, a, b, s).value,
        (true, false) => {
            let g = |t: f64| 2.0 * t * f(a + t * t);
            integrate(&g, 0.0, (b - a).sqrt(), s).value
        }
        (false, true) => {
            let g = |t: f64| 2.0 * t * f(b - t * t);
            integrate(&g, 0.0, (b - a).sqrt(), s).value
        }
        (true, true) => {
            let m = 0.5 * (a + b);
            integrate_sqrt_ends(f, a, m, true, false, s)
                + integrate_sqrt_ends(f, m, b, false, true, s)
        }
    }
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "root not bracketed on [{a}, {b}]"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
            return Ok(b);
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
    Err(Error::Numerical("Brent iteration did not converge".into()))
}

/// Plain bisection; returns the final bracket midpoint.
pub fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "root not bracketed on [{a}, {b}]"
        )));
    }
    let slo = flo.signum();
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// a^{3/2} - b^{3/2} for a, b >= 0 given d = a - b exactly.
pub fn pow32_diff(a: f64, b: f64, d: f64) -> f64 {
    let a = a.max(0.0);
    let b = b.max(0.0);
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let sa = a.sqrt();
    let sb = b.sqrt();
    d * (a + sa * sb + b) / (sa + sb)
}

/// sqrt(a) - sqrt(b) for a, b >= 0 given d = a - b exactly.
pub fn sqrt_diff(a: f64, b: f64, d: f64) -> f64 {
    let s = a.max(0.0).sqrt() + b.max(0.0).sqrt();
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}
