//! Expected densities for the three wave classes.
//!
//! With u = xi1 - alpha every density is a shifted integral
//! `int g(alpha+u) |u| / sqrt(u^2 - c) du` over {u^2 > c}, and every Sagdeev
//! potential term is `int g(alpha+u) |u| (sqrt((u^2-c_lo)+) - sqrt((u^2-c_hi)+)) du`.
//! Box marginals are integrated in closed form; other kinds use adaptive quadrature
//! after removing the square-root singularities.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{Marginal, PlasmaParams};
use crate::quad::{integrate, integrate_sqrt_ends, pow32_diff, sqrt_diff, QuadSettings};
use crate::sagdeev::{SagdeevPotential, WaveKind};

/// `int_a^b f(u) |u| / sqrt(u^2 - c) du` via w = sign(u) sqrt(u^2 - c).
pub fn integrate_sqrt_singular<F: Fn(f64) -> f64>(
    f: &F,
    c: f64,
    a: f64,
    b: f64,
    s: &QuadSettings,
) -> Result<f64> {
    if c < 0.0 || !(a <= b) {
        return domain("integrate_sqrt_singular needs c >= 0 and a <= b");
    }
    let r = c.sqrt();
    let slack = 1e-14 * r.max(1.0);
    if a >= r - slack {
        let wa = (a * a - c).max(0.0).sqrt();
        let wb = (b * b - c).max(0.0).sqrt();
        let h = |w: f64| f((w * w + c).sqrt());
        Ok(integrate(&h, wa, wb, s).value)
    } else if b <= -r + slack {
        let wa = (a * a - c).max(0.0).sqrt();
        let wb = (b * b - c).max(0.0).sqrt();
        let h = |w: f64| f(-(w * w + c).sqrt());
        Ok(integrate(&h, wb, wa, s).value)
    } else {
        domain("interval crosses singular band")
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi >= 0.0) || !phi.is_finite() {
        return domain(format!("Phi = {phi} is outside [0, inf)"));
    }
    Ok(())
}

/// `sqrt((q^2-c)+) - sqrt((p^2-c)+)` for 0 <= p <= q.
fn dens_antider(p: f64, q: f64, c: f64) -> f64 {
    let (a, b) = (q * q - c, p * p - c);
    if b > 0.0 {
        sqrt_diff(a, b, (q - p) * (q + p))
    } else if a > 0.0 {
        a.sqrt()
    } else {
        0.0
    }
}

fn pot_prim(u: f64, c_lo: f64, c_hi: f64) -> f64 {
    let a = u * u - c_lo;
    let b = u * u - c_hi;
    if b > 0.0 {
        pow32_diff(a, b, c_hi - c_lo)
    } else if a > 0.0 {
        a * a.sqrt()
    } else {
        0.0
    }
}

/// Splits [a, b] at 0 and folds the negative part onto the positive axis.
fn fold(a: f64, b: f64) -> [(f64, f64); 2] {
    let neg = if a < 0.0 {
        (-(b.min(0.0)), -a)
    } else {
        (0.0, 0.0)
    };
    let pos = if b > 0.0 { (a.max(0.0), b) } else { (0.0, 0.0) };
    [neg, pos]
}

/// Segment edges in u for a non-box marginal, clipped to the range.
fn edges(g: &Marginal, alpha: f64, umin: f64, umax: f64, extra: &[f64]) -> Vec<f64> {
    let (slo, shi) = match g.support() {
        Some(s) => s,
        None => return Vec::new(),
    };
    let lo = umin.max(slo - alpha);
    let hi = umax.min(shi - alpha);
    if !(lo < hi) {
        return Vec::new();
    }
    let mut e = vec![lo, hi, 0.0];
    e.extend(g.breakpoints().iter().map(|b| b - alpha));
    e.extend_from_slice(extra);
    e.retain(|v| *v >= lo && *v <= hi);
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

/// `int_{umin}^{umax} g(alpha+u) |u| / sqrt(u^2-c) chi(u^2 > c) du`.
pub(crate) fn dens_shift(
    g: &Marginal,
    alpha: f64,
    c: f64,
    umin: f64,
    umax: f64,
    s: &QuadSettings,
) -> f64 {
    match g {
        Marginal::Piecewise(pieces) => {
            let mut total = 0.0;
            for p in pieces {
                let a = (p.lo - alpha).max(umin);
                let b = (p.hi - alpha).min(umax);
                if !(a < b) {
                    continue;
                }
                for (x, y) in fold(a, b) {
                    if y > x {
                        total += p.height * dens_antider(x, y, c);
                    }
                }
            }
            total
        }
        _ => {
            let r = c.abs().sqrt();
            let e = edges(g, alpha, umin, umax, &[r, -r]);
            let mut total = 0.0;
            for w in e.windows(2) {
                let (a, b) = (w[0], w[1]);
                if c > 0.0 {
                    if a >= r {
                        let h = |u: f64| g.eval(alpha + u);
                        total += integrate_sqrt_singular(&h, c, a, b, s).unwrap_or(0.0);
                    } else if b <= -r {
                        let h = |u: f64| g.eval(alpha + u);
                        total += integrate_sqrt_singular(&h, c, a, b, s).unwrap_or(0.0);
                    }
                } else {
                    let h = |u: f64| {
                        let d = (u * u - c).sqrt();
                        if d == 0.0 {
                            g.eval(alpha + u)
                        } else {
                            g.eval(alpha + u) * u.abs() / d
                        }
                    };
                    total += integrate(&h, a, b, s).value;
                }
            }
            total
        }
    }
}

/// `int g(alpha+u) |u| (sqrt((u^2-c_lo)+) - sqrt((u^2-c_hi)+)) du` over [umin, umax], c_lo <= c_hi.
pub(crate) fn pot_shift(
    g: &Marginal,
    alpha: f64,
    c_lo: f64,
    c_hi: f64,
    umin: f64,
    umax: f64,
    s: &QuadSettings,
) -> f64 {
    match g {
        Marginal::Piecewise(pieces) => {
            let mut total = 0.0;
            for p in pieces {
                let a = (p.lo - alpha).max(umin);
                let b = (p.hi - alpha).min(umax);
                if !(a < b) {
                    continue;
                }
                for (x, y) in fold(a, b) {
                    if y > x {
                        total +=
                            p.height * (pot_prim(y, c_lo, c_hi) - pot_prim(x, c_lo, c_hi)) / 3.0;
                    }
                }
            }
            total
        }
        _ => {
            let mut special = Vec::new();
            for c in [c_lo, c_hi] {
                if c > 0.0 {
                    special.push(c.sqrt());
                    special.push(-c.sqrt());
                }
            }
            let e = edges(g, alpha, umin, umax, &special);
            let h = |u: f64| {
                let a = u * u - c_lo;
                let b = u * u - c_hi;
                let d = if b > 0.0 {
                    sqrt_diff(a, b, c_hi - c_lo)
                } else if a > 0.0 {
                    a.sqrt()
                } else {
                    0.0
                };
                g.eval(alpha + u) * u.abs() * d
            };
            let is_special = |v: f64| special.contains(&v);
            e.windows(2)
                .map(|w| integrate_sqrt_ends(&h, w[0], w[1], is_special(w[0]), is_special(w[1]), s))
                .sum()
        }
    }
}

/// Maxwellian centred exactly at alpha: densities and potentials have closed forms.
fn centred_maxwellian(g: &Marginal, alpha: f64) -> Option<(f64, f64, f64)> {
    match g {
        Marginal::Maxwellian {
            mass,
            center,
            kappa,
            q,
        } if *center == alpha => Some((*mass, *kappa, *q)),
        _ => None,
    }
}

/// Untrapped ion density for solitary waves and trains.
pub fn rho_plus_inf(
    g: &Marginal,
    params: &PlasmaParams,
    phi: f64,
    s: &QuadSettings,
) -> Result<f64> {
    check_phi(phi)?;
    let c = -2.0 * params.q_plus * phi;
    Ok(dens_shift(
        g,
        params.alpha,
        c,
        f64::NEG_INFINITY,
        f64::INFINITY,
        s,
    ))
}

/// Trapped ion density for trapping energy beta.
pub fn rho_plus_trapped(
    g: &Marginal,
    params: &PlasmaParams,
    beta: f64,
    phi: f64,
    s: &QuadSettings,
) -> Result<f64> {
    if !(beta > 0.0) {
        return domain("beta must be positive");
    }
    if !(0.0..=beta).contains(&phi) {
        return domain(format!("Phi = {phi} is outside [0, {beta}]"));
    }
    let q = params.q_plus;
    let c = 2.0 * q * (beta - phi);
    let top = (2.0 * q * beta).sqrt();
    Ok(2.0 * dens_shift(g, params.alpha, c, 0.0, top, s))
}

/// Electron density (reflected electrons excluded).
pub fn rho_minus(g: &Marginal, params: &PlasmaParams, phi: f64, s: &QuadSettings) -> Result<f64> {
    check_phi(phi)?;
    if let Some((mass, kappa, q)) = centred_maxwellian(g, params.alpha) {
        return Ok(mass * (-kappa * phi * params.q_minus / q).exp());
    }
    let c = 2.0 * params.q_minus * phi;
    Ok(dens_shift(
        g,
        params.alpha,
        c,
        f64::NEG_INFINITY,
        f64::INFINITY,
        s,
    ))
}

/// Ion density for shocks, built from the left end state.
pub fn rho_shock_plus(
    g_l: &Marginal,
    params: &PlasmaParams,
    phi_l: f64,
    phi: f64,
    s: &QuadSettings,
) -> Result<f64> {
    if !(phi_l > 0.0) {
        return domain("Phi_l must be positive");
    }
    if !(0.0..=phi_l).contains(&phi) {
        return domain(format!("Phi = {phi} is outside [0, {phi_l}]"));
    }
    let c = 2.0 * params.q_plus * (phi_l - phi);
    Ok(dens_shift(
        g_l,
        params.alpha,
        c,
        f64::NEG_INFINITY,
        f64::INFINITY,
        s,
    ))
}

/// `int_a^b e+ rho+inf`, a <= b.
pub(crate) fn v_ion_inf_between(
    g: &Marginal,
    params: &PlasmaParams,
    a: f64,
    b: f64,
    s: &QuadSettings,
) -> f64 {
    let q = params.q_plus;
    params.e_plus / q
        * pot_shift(
            g,
            params.alpha,
            -2.0 * q * b,
            -2.0 * q * a,
            f64::NEG_INFINITY,
            f64::INFINITY,
            s,
        )
}

/// `int_a^b e- rho-`, a <= b.
pub(crate) fn v_electron_between(
    g: &Marginal,
    params: &PlasmaParams,
    a: f64,
    b: f64,
    s: &QuadSettings,
) -> f64 {
    if let Some((mass, kappa, q)) = centred_maxwellian(g, params.alpha) {
        let k = kappa * params.q_minus / q;
        return -params.e_minus * mass * (-k * a).exp() * (-k * (b - a)).exp_m1() / k;
    }
    let q = params.q_minus;
    params.e_minus / q
        * pot_shift(
            g,
            params.alpha,
            2.0 * q * a,
            2.0 * q * b,
            f64::NEG_INFINITY,
            f64::INFINITY,
            s,
        )
}

/// `int_a^b e+ rho+0`, 0 <= a <= b <= beta.
pub(crate) fn v_ion_trapped_between(
    g: &Marginal,
    params: &PlasmaParams,
    beta: f64,
    a: f64,
    b: f64,
    s: &QuadSettings,
) -> f64 {
    let q = params.q_plus;
    let top = (2.0 * q * beta).sqrt();
    2.0 * params.e_plus / q
        * pot_shift(
            g,
            params.alpha,
            2.0 * q * (beta - b),
            2.0 * q * (beta - a),
            0.0,
            top,
            s,
        )
}

/// `int_a^b e+ rho+` for shocks, 0 <= a <= b <= phi_l.
pub(crate) fn v_ion_shock_between(
    g_l: &Marginal,
    params: &PlasmaParams,
    phi_l: f64,
    a: f64,
    b: f64,
    s: &QuadSettings,
) -> f64 {
    let q = params.q_plus;
    let c_lo = 2.0 * q * (phi_l - b);
    let c_hi = 2.0 * q * (phi_l - a);
    params.e_plus / q
        * pot_shift(
            g_l,
            params.alpha,
            c_lo,
            c_hi,
            f64::NEG_INFINITY,
            f64::INFINITY,
            s,
        )
}

pub(crate) fn v_ion_inf(g: &Marginal, params: &PlasmaParams, phi: f64, s: &QuadSettings) -> f64 {
    v_ion_inf_between(g, params, 0.0, phi, s)
}

pub(crate) fn v_electron(g: &Marginal, params: &PlasmaParams, phi: f64, s: &QuadSettings) -> f64 {
    v_electron_between(g, params, 0.0, phi, s)
}

pub(crate) fn v_ion_trapped(
    g: &Marginal,
    params: &PlasmaParams,
    beta: f64,
    phi: f64,
    s: &QuadSettings,
) -> f64 {
    v_ion_trapped_between(g, params, beta, 0.0, phi, s)
}

/// Brute-force midpoint rule for a density on `n` cells.
///
/// For c > 0 the cells are uniform in t with |u| = sqrt(c) + t^2, so the inverse
/// square-root edge is resolved; the band t < excise is dropped.
pub fn brute_force_density(
    g: &Marginal,
    alpha: f64,
    c: f64,
    umin: f64,
    umax: f64,
    n: usize,
    excise: f64,
) -> f64 {
    let (slo, shi) = match g.support() {
        Some(s) => s,
        None => return 0.0,
    };
    let lo = umin.max(slo - alpha);
    let hi = umax.min(shi - alpha);
    if !(lo < hi) {
        return 0.0;
    }
    let f = |u: f64| {
        let d = (u * u - c).sqrt();
        if d > 0.0 {
            g.eval(alpha + u) * u.abs() / d
        } else {
            0.0
        }
    };
    if c <= 0.0 {
        let h = (hi - lo) / n as f64;
        return (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    }
    let r = c.sqrt();
    // (sign, t range) for each side of the band
    let mut sides = Vec::new();
    let t0 = excise;
    if hi > r {
        let a = (lo.max(r) - r).max(0.0).sqrt().max(t0);
        let b = (hi - r).sqrt();
        if b > a {
            sides.push((1.0, a, b));
        }
    }
    if lo < -r {
        let a = (-hi.min(-r) - r).max(0.0).sqrt().max(t0);
        let b = (-lo - r).sqrt();
        if b > a {
            sides.push((-1.0, a, b));
        }
    }
    let total: f64 = sides.iter().map(|(_, a, b)| b - a).sum();
    let mut sum = 0.0;
    for (sg, a, b) in sides {
        let m = ((n as f64) * (b - a) / total).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let t = a + (i as f64 + 0.5) * h;
            acc += 2.0 * t * f(sg * (r + t * t));
        }
        sum += acc * h;
    }
    sum
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub operation: String,
    pub phi: f64,
    pub value: f64,
    pub brute_force: f64,
    pub relative_error: f64,
}

/// Compares every density of a potential with the brute-force midpoint rule at the given levels.
pub fn oracle_compare(
    pot: &SagdeevPotential,
    phis: &[f64],
    n: usize,
    excise: f64,
) -> Result<Vec<OracleCase>> {
    let p = &pot.params;
    let s = &pot.settings;
    let a = p.alpha;
    let all = (f64::NEG_INFINITY, f64::INFINITY);
    let mut out = Vec::new();
    let mut push = |op: &str, phi: f64, value: f64, brute: f64| {
        let rel = if value == brute {
            0.0
        } else {
            (value - brute).abs() / value.abs().max(brute.abs())
        };
        out.push(OracleCase {
            operation: op.into(),
            phi,
            value,
            brute_force: brute,
            relative_error: rel,
        });
    };
    for &phi in phis {
        let bm = brute_force_density(
            &pot.g_minus,
            a,
            2.0 * p.q_minus * phi,
            all.0,
            all.1,
            n,
            excise,
        );
        push("rho_minus", phi, rho_minus(&pot.g_minus, p, phi, s)?, bm);
        if pot.kind == WaveKind::Shock {
            let c = 2.0 * p.q_plus * (pot.amplitude - phi);
            let b = brute_force_density(&pot.g_plus, a, c, all.0, all.1, n, excise);
            push(
                "rho_shock_plus",
                phi,
                rho_shock_plus(&pot.g_plus, p, pot.amplitude, phi, s)?,
                b,
            );
            continue;
        }
        let b = brute_force_density(
            &pot.g_plus,
            a,
            -2.0 * p.q_plus * phi,
            all.0,
            all.1,
            n,
            excise,
        );
        push(
            "rho_plus_inf",
            phi,
            rho_plus_inf(&pot.g_plus, p, phi, s)?,
            b,
        );
        if !pot.trapped.is_zero() {
            let beta = pot.amplitude;
            let top = (2.0 * p.q_plus * beta).sqrt();
            let b = 2.0
                * brute_force_density(
                    &pot.trapped,
                    a,
                    2.0 * p.q_plus * (beta - phi),
                    0.0,
                    top,
                    n,
                    excise,
                );
            push(
                "rho_plus_trapped",
                phi,
                rho_plus_trapped(&pot.trapped, p, beta, phi, s)?,
                b,
            );
        }
    }
    Ok(out)
}
