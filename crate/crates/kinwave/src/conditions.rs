//! Existence clauses, endpoint classification and uniqueness cases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{beta_star, check_symmetry, default_symmetry_tol, Marginal, PlasmaParams};
use crate::quad::bisect;
use crate::sagdeev::{Potential, SagdeevPotential, WaveKind};

pub const EQUILIBRIUM_TOL: f64 = 1e-10;
pub const SLOPE_TOL: f64 = 1e-8;
pub const POSITIVITY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailClass {
    Divergent,
    Convergent,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Zero,
    Amplitude,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub endpoint: f64,
    pub class: TailClass,
    pub slope: f64,
    /// Fitted local exponent of V, when the slope vanishes.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Clause {
    pub label: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub kind: WaveKind,
    pub amplitude: f64,
    pub tolerance: f64,
    pub quasi_neutral: Option<bool>,
    pub symmetry_ok: Option<bool>,
    pub symmetry_delta: Option<f64>,
    pub positivity_ok: bool,
    pub min_location: f64,
    pub min_value: f64,
    pub endpoint_zero_ok: bool,
    pub endpoint_value: f64,
    pub tail_at_0: TailReport,
    pub tail_at_amplitude: TailReport,
    pub clauses: Vec<Clause>,
    pub verdict: String,
    pub failed: Vec<String>,
}

impl ConditionReport {
    pub fn exists(&self) -> bool {
        self.failed.is_empty()
    }
}

/// sup |V| on a uniform sample, used to scale tolerances.
pub fn v_scale(pot: &dyn Potential) -> f64 {
    let amp = pot.amplitude();
    (0..=200)
        .map(|i| pot.v(amp * i as f64 / 200.0).abs())
        .fold(0.0, f64::max)
}

fn equilibrium_tol(pot: &dyn Potential) -> f64 {
    EQUILIBRIUM_TOL * v_scale(pot).max(f64::MIN_POSITIVE)
}

pub fn check_quasineutral(
    g_plus: &Marginal,
    g_minus: &Marginal,
    params: &PlasmaParams,
    tol: f64,
) -> bool {
    (params.e_plus * g_plus.mass() - params.e_minus * g_minus.mass()).abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaChoice {
    Value(f64),
    Degenerate,
}

/// Shock speed from the end states; `Degenerate` leaves alpha free.
pub fn compute_alpha(gl: &Marginal, gr: &Marginal) -> Result<AlphaChoice> {
    let den = gr.mass() - gl.mass();
    let num = gr.first_moment() - gl.first_moment();
    let tol = 1e-12 * gl.mass().max(gr.mass()).max(1.0);
    if den.abs() > tol {
        Ok(AlphaChoice::Value(num / den))
    } else if num.abs() <= tol {
        Ok(AlphaChoice::Degenerate)
    } else {
        Err(Error::Input(format!(
            "inconsistent end states: mass difference {den:e} but moment difference {num:e}"
        )))
    }
}

/// Sample points for map comparisons, avoiding the immediate neighbourhood of jump points.
fn map_samples(extent: f64, jumps: &[f64]) -> Vec<f64> {
    let n = 20001;
    (0..n)
        .map(|i| -extent + 2.0 * extent * i as f64 / (n - 1) as f64)
        .filter(|w| jumps.iter().all(|j| (w - j).abs() > 1e-9 * extent.max(1.0)))
        .collect()
}

/// Matching clauses across a shock, labelled Flr1..Flr6.
pub fn shock_matching_clauses(
    gl_plus: &Marginal,
    gr_plus: &Marginal,
    gl_minus: &Marginal,
    gr_minus: &Marginal,
    params: &PlasmaParams,
    phi_l: f64,
    tol: f64,
) -> Vec<Clause> {
    let a = params.alpha;
    let bp = 2.0 * params.q_plus * phi_l;
    let bm = 2.0 * params.q_minus * phi_l;
    let extent = [gl_plus, gr_plus, gl_minus, gr_minus]
        .iter()
        .filter_map(|g| g.support())
        .map(|(lo, hi)| (lo - a).abs().max((hi - a).abs()))
        .fold(bp.max(bm).sqrt(), f64::max)
        * 1.05;
    // jump points of both sides of each map, expressed in the compared variable
    let to_w = |g: &Marginal, band: f64| -> Vec<f64> {
        g.breakpoints()
            .iter()
            .flat_map(|b| {
                let u2 = (b - a) * (b - a) - band;
                if u2 >= 0.0 {
                    vec![u2.sqrt(), -u2.sqrt()]
                } else {
                    vec![]
                }
            })
            .collect()
    };
    let rel = |x: f64, y: f64, g: &Marginal| (x - y).abs() <= tol * g.sup().max(1.0);
    let mut jumps_p: Vec<f64> = gr_plus.breakpoints().iter().map(|b| b - a).collect();
    jumps_p.extend(to_w(gl_plus, bp));
    let mut jumps_m: Vec<f64> = gl_minus.breakpoints().iter().map(|b| b - a).collect();
    jumps_m.extend(to_w(gr_minus, bm));
    let mut worst = [0usize; 4];
    for w in map_samples(extent, &jumps_p) {
        let img = gl_plus.eval(a + w.signum() * (w * w + bp).sqrt());
        if !rel(gr_plus.eval(a + w), img, gl_plus) {
            worst[if w < 0.0 { 0 } else { 1 }] += 1;
        }
    }
    for u in map_samples(extent, &jumps_m) {
        let img = gr_minus.eval(a + u.signum() * (u * u + bm).sqrt());
        if !rel(gl_minus.eval(a + u), img, gr_minus) {
            worst[if u < 0.0 { 2 } else { 3 }] += 1;
        }
    }
    let mk = |label: &str, bad: usize, what: &str| Clause {
        label: label.into(),
        ok: bad == 0,
        detail: if bad == 0 {
            what.into()
        } else {
            format!("{what}: {bad} mismatching samples")
        },
    };
    let sym_p = check_symmetry(gl_plus, a, bp.sqrt(), tol);
    let sym_m = check_symmetry(gr_minus, a, bm.sqrt(), tol);
    vec![
        mk(
            "Flr1",
            worst[0],
            "left-moving ions map from left to right state",
        ),
        mk(
            "Flr2",
            worst[1],
            "right-moving ions map from left to right state",
        ),
        mk(
            "Flr3",
            worst[2],
            "left-moving electrons map from right to left state",
        ),
        mk(
            "Flr4",
            worst[3],
            "right-moving electrons map from right to left state",
        ),
        Clause {
            label: "Flr5".into(),
            ok: sym_p,
            detail: "left ion state symmetric on the reflection band".into(),
        },
        Clause {
            label: "Flr6".into(),
            ok: sym_m,
            detail: "right electron state symmetric on the reflection band".into(),
        },
    ]
}

pub fn check_shock_matching(
    gl_plus: &Marginal,
    gr_plus: &Marginal,
    gl_minus: &Marginal,
    gr_minus: &Marginal,
    params: &PlasmaParams,
    phi_l: f64,
    tol: f64,
) -> bool {
    shock_matching_clauses(gl_plus, gr_plus, gl_minus, gr_minus, params, phi_l, tol)
        .iter()
        .all(|c| c.ok)
}

/// Decides whether int dPhi / sqrt(V) diverges at the endpoint.
pub fn classify_tail(pot: &dyn Potential, endpoint: Endpoint) -> Result<TailReport> {
    let amp = pot.amplitude();
    let e = match endpoint {
        Endpoint::Zero => 0.0,
        Endpoint::Amplitude => amp,
    };
    let tol = equilibrium_tol(pot);
    let ve = pot.v(e);
    if ve.abs() > tol {
        return Err(Error::Condition(format!(
            "endpoint not equilibrium: V({e}) = {ve:e}"
        )));
    }
    let slope = pot.dv(e);
    if slope.abs() > SLOPE_TOL {
        return Ok(TailReport {
            endpoint: e,
            class: TailClass::Convergent,
            slope,
            exponent: None,
        });
    }
    let inward = if endpoint == Endpoint::Zero {
        1.0
    } else {
        -1.0
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=10 {
        let d = amp * 10f64.powf(-3.0 - 0.5 * k as f64);
        let v = if inward > 0.0 {
            pot.v_between(e, e + d)
        } else {
            -pot.v_between(e - d, e)
        };
        if v <= 0.0 {
            return Ok(TailReport {
                endpoint: e,
                class: TailClass::Indeterminate,
                slope,
                exponent: None,
            });
        }
        xs.push(d.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    let class = if p >= 1.9 {
        TailClass::Divergent
    } else {
        TailClass::Indeterminate
    };
    Ok(TailReport {
        endpoint: e,
        class,
        slope,
        exponent: Some(p),
    })
}

fn tail_or_indeterminate(pot: &dyn Potential, endpoint: Endpoint) -> TailReport {
    classify_tail(pot, endpoint).unwrap_or_else(|_| TailReport {
        endpoint: if endpoint == Endpoint::Zero {
            0.0
        } else {
            pot.amplitude()
        },
        class: TailClass::Indeterminate,
        slope: f64::NAN,
        exponent: None,
    })
}

/// Minimum of V over the interior sample and over interior critical points.
fn interior_minimum(pot: &dyn Potential) -> (f64, f64) {
    let amp = pot.amplitude();
    let n = POSITIVITY_SAMPLES;
    let mut best = (f64::NAN, f64::INFINITY);
    let mut prev: Option<(f64, f64)> = None;
    let mut pts: Vec<f64> = (1..=n).map(|i| amp * i as f64 / (n + 1) as f64).collect();
    // Kinks that are endpoints up to rounding belong to the tail clauses.
    let margin = 1e-9 * amp;
    pts.extend(
        pot.kinks()
            .into_iter()
            .filter(|k| *k > margin && *k < amp - margin),
    );
    pts.sort_by(f64::total_cmp);
    for &x in &pts {
        let v = pot.v(x);
        if v < best.1 {
            best = (x, v);
        }
        let d = pot.dv(x);
        if let Some((x0, d0)) = prev {
            if d0 < 0.0 && d > 0.0 {
                if let Ok(c) = bisect(|t| pot.dv(t), x0, x, 1e-14 * amp) {
                    let vc = pot.v(c);
                    if vc < best.1 {
                        best = (c, vc);
                    }
                }
            }
        }
        prev = Some((x, d));
    }
    best
}

/// Evaluates every existence clause for the potential's wave class.
pub fn check_exists(pot: &dyn Potential) -> ConditionReport {
    let kind = pot.kind();
    let amp = pot.amplitude();
    let tol = equilibrium_tol(pot);
    let mut clauses = Vec::new();

    let (symmetry_ok, symmetry_delta) = match (kind, pot.symmetry_marginal()) {
        (WaveKind::Shock, _) | (_, None) => (None, None),
        (_, Some((g, p))) => {
            let delta = (2.0 * p.q_minus * amp).sqrt();
            (
                Some(check_symmetry(g, p.alpha, delta, default_symmetry_tol(g))),
                Some(delta),
            )
        }
    };
    let quasi_neutral = match (kind, pot.as_sagdeev()) {
        (WaveKind::Solitary, Some(s)) => Some(check_quasineutral(
            &s.g_plus,
            &s.g_minus,
            &s.params,
            1e-12 * s.g_plus.mass().max(1.0),
        )),
        (WaveKind::Shock, _) => {
            Some(pot.dv(0.0).abs() <= SLOPE_TOL && pot.dv(amp).abs() <= SLOPE_TOL)
        }
        _ => None,
    };

    let (min_location, min_value) = interior_minimum(pot);
    let positivity_ok = min_value > tol;
    let endpoint_value = pot.v(amp);
    let endpoint_zero_ok = endpoint_value.abs() <= tol;
    let t0 = tail_or_indeterminate(pot, Endpoint::Zero);
    let ta = tail_or_indeterminate(pot, Endpoint::Amplitude);

    let positivity_detail = if positivity_ok {
        format!("min V = {min_value:e} at Phi = {min_location}")
    } else if min_value < -tol {
        format!("V negative: {min_value:e} at Phi = {min_location}")
    } else {
        format!("V indistinguishable from zero at Phi = {min_location} (|V| <= {tol:e})")
    };
    let pos_clause = |label: &str| Clause {
        label: label.into(),
        ok: positivity_ok && endpoint_zero_ok,
        detail: if endpoint_zero_ok {
            positivity_detail.clone()
        } else {
            format!("V(amplitude) = {endpoint_value:e} is not zero; {positivity_detail}")
        },
    };
    let conv_in =
        |t: &TailReport, sign: f64| t.class == TailClass::Convergent && t.slope * sign > 0.0;
    let describe = |t: &TailReport| match t.exponent {
        Some(p) => format!(
            "{:?} at {} (slope {:e}, exponent {p:.3})",
            t.class, t.endpoint, t.slope
        ),
        None => format!("{:?} at {} (slope {:e})", t.class, t.endpoint, t.slope),
    };
    match kind {
        WaveKind::Solitary | WaveKind::Train => {
            let pre = if kind == WaveKind::Solitary { "" } else { "t" };
            clauses.push(Clause {
                label: format!("{pre}G-beta1"),
                ok: symmetry_ok.unwrap_or(true),
                detail: match symmetry_delta {
                    Some(d) => format!("electron marginal symmetric about alpha up to {d}"),
                    None => "no electron marginal to check".into(),
                },
            });
            clauses.push(pos_clause(&format!("{pre}G-beta2")));
            let ok3 = if kind == WaveKind::Solitary {
                t0.class == TailClass::Divergent && conv_in(&ta, -1.0)
            } else {
                conv_in(&t0, 1.0) && conv_in(&ta, -1.0)
            };
            clauses.push(Clause {
                label: format!("{pre}G-beta3"),
                ok: ok3,
                detail: format!("{}; {}", describe(&t0), describe(&ta)),
            });
        }
        WaveKind::Shock => {
            clauses.push(pos_clause("Phil1"));
            clauses.push(Clause {
                label: "Phil2".into(),
                ok: t0.class == TailClass::Divergent && ta.class == TailClass::Divergent,
                detail: format!("{}; {}", describe(&t0), describe(&ta)),
            });
        }
    }
    let failed: Vec<String> = clauses
        .iter()
        .filter(|c| !c.ok)
        .map(|c| c.label.clone())
        .collect();
    ConditionReport {
        kind,
        amplitude: amp,
        tolerance: tol,
        quasi_neutral,
        symmetry_ok,
        symmetry_delta,
        positivity_ok,
        min_location,
        min_value,
        endpoint_zero_ok,
        endpoint_value,
        tail_at_0: t0,
        tail_at_amplitude: ta,
        verdict: if failed.is_empty() {
            "exists".into()
        } else {
            "fails".into()
        },
        failed,
        clauses,
    }
}

/// First Phi in [lo, hi) where f turns negative (below -tol); `hi` if none.
pub fn first_negative(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let n = 4000;
    let mut prev = lo;
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        if x >= hi {
            break;
        }
        if f(x) < -tol {
            let xtol = 1e-15 * hi.abs().max(1e-300);
            let root = if f(prev) >= 0.0 {
                bisect(f, prev, x, xtol)
            } else {
                bisect(|t| if f(t) < -tol { 1.0 } else { -1.0 }, prev, x, xtol)
            };
            return root.unwrap_or(x);
        }
        prev = x;
    }
    hi
}

/// Upper bound beyond which V-infinity is nondecreasing (electrons fully reflected).
pub fn electron_saturation(g_minus: &Marginal, params: &PlasmaParams) -> f64 {
    match g_minus.support() {
        Some((lo, hi)) => {
            let u = (lo - params.alpha).abs().max((hi - params.alpha).abs());
            u * u / (2.0 * params.q_minus)
        }
        None => 0.0,
    }
}

/// inf { Phi in [0, beta*) : V-infinity(Phi) < 0 }, or beta* when there is none.
pub fn beta_sharp(v_inf: &dyn Fn(f64) -> f64, beta_star: f64, search_limit: f64) -> f64 {
    let hi = beta_star.min(search_limit);
    if !(hi > 0.0) {
        return beta_star;
    }
    let scale = (0..=400)
        .map(|i| v_inf(hi * i as f64 / 400.0).abs())
        .fold(0.0, f64::max);
    let tol = EQUILIBRIUM_TOL * scale.max(f64::MIN_POSITIVE);
    let r = first_negative(v_inf, 0.0, hi, tol);
    if r >= hi {
        beta_star
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    UniqueCaseI,
    UniqueCaseIi,
    NonuniqueA,
    NonuniqueB,
    NonuniqueC,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessVerdict {
    pub classification: Uniqueness,
    pub beta_star: Option<f64>,
    pub beta_sharp: Option<f64>,
    pub dv_inf_at_sharp: Option<f64>,
    pub details: String,
}

/// Trapped mass on (alpha, sqrt(2 q+ beta) + alpha).
pub fn trapped_mass(pot: &SagdeevPotential) -> f64 {
    let a = pot.params.alpha;
    pot.trapped
        .mass_on(a, a + (2.0 * pot.params.q_plus * pot.amplitude).sqrt())
}

pub fn classify_uniqueness(pot: &SagdeevPotential) -> Result<UniquenessVerdict> {
    if pot.kind != WaveKind::Solitary {
        return Err(Error::Input(
            "uniqueness classification applies to solitary waves".into(),
        ));
    }
    let p = &pot.params;
    let beta = pot.amplitude;
    let bstar = beta_star(&pot.g_minus, p);
    let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
    let g_mass = trapped_mass(pot);
    let mut v = UniquenessVerdict {
        classification: Uniqueness::NonuniqueA,
        beta_star: finite(bstar),
        beta_sharp: None,
        dv_inf_at_sharp: None,
        details: String::new(),
    };
    if g_mass > 1e-12 * pot.g_plus.mass().max(1.0) {
        v.details = format!("trapped mass {g_mass:e} > 0");
        return Ok(v);
    }
    if (beta - bstar).abs() <= 1e-9 * beta.max(1.0) {
        v.classification = Uniqueness::UniqueCaseI;
        v.details = "G = 0 and beta = beta*".into();
        return Ok(v);
    }
    let limit = electron_saturation(&pot.g_minus, p).max(beta) * 1.01;
    let vinf = |x: f64| pot.v_inf(x);
    // V-infinity on (beta, beta*)
    let hi = bstar.min(limit);
    let scale = (0..=400)
        .map(|i| vinf(beta + (hi - beta) * i as f64 / 400.0).abs())
        .fold(0.0, f64::max);
    let tol = EQUILIBRIUM_TOL * scale.max(f64::MIN_POSITIVE);
    let after = if hi > beta {
        first_negative(&vinf, beta, hi, tol)
    } else {
        hi
    };
    if after >= hi {
        v.classification = Uniqueness::UniqueCaseIi;
        v.details = "G = 0 and V-infinity >= 0 on (beta, beta*)".into();
        return Ok(v);
    }
    let bs = beta_sharp(&vinf, bstar, limit);
    let d = pot.dv_inf(bs);
    let dscale = (0..=400)
        .map(|i| pot.dv_inf(hi * i as f64 / 400.0).abs())
        .fold(0.0, f64::max);
    v.beta_sharp = Some(bs);
    v.dv_inf_at_sharp = Some(d);
    if d < -SLOPE_TOL * dscale.max(1.0) {
        v.classification = Uniqueness::NonuniqueB;
        v.details = format!("V-infinity changes sign at beta_sharp = {bs} with slope {d:e}");
    } else {
        v.classification = Uniqueness::NonuniqueC;
        v.details = format!("V-infinity touches zero at beta_sharp = {bs} with vanishing slope");
    }
    Ok(v)
}
