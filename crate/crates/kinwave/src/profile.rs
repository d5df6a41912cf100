//! Potential profiles Phi(X) from X(Phi) = int dPhi / sqrt(2 V).
//!
//! Each monotone branch is split into segments, each with a parametrization
//! that keeps dX/dt bounded: Phi = e +- t^2 next to a simple zero, Phi = e +- d e^{-t}
//! toward a quadratic zero, linear otherwise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conditions::{check_exists, v_scale, EQUILIBRIUM_TOL, SLOPE_TOL};
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::quad::{gk15, integrate, QuadSettings};
use crate::sagdeev::{Potential, WaveKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSettings {
    /// Tails stop at distance eps_tail * amplitude from a quadratic zero.
    pub eps_tail: f64,
    /// Uniform output points per monotone branch.
    pub points_per_branch: usize,
    /// Quadrature nodes per segment of the X(Phi) table.
    pub nodes_per_segment: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        ProfileSettings {
            eps_tail: 1e-6,
            points_per_branch: 2001,
            nodes_per_segment: 200,
            rel_tol: 1e-13,
            abs_tol: 1e-16,
        }
    }
}

impl ProfileSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tail > 0.0 && self.eps_tail < 0.25) {
            return Err(Error::Input("eps_tail must lie in (0, 0.25)".into()));
        }
        if self.points_per_branch < 3 || self.nodes_per_segment < 4 {
            return Err(Error::Input(
                "points_per_branch >= 3 and nodes_per_segment >= 4 required".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Input("profile tolerances must be positive".into()));
        }
        Ok(())
    }

    fn quad(&self) -> QuadSettings {
        QuadSettings {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Sqrt { e: f64, dir: f64, slope: f64 },
    Exp { e: f64, d0: f64, dir: f64 },
    Lin { a: f64, b: f64 },
}

impl Map {
    fn phi(&self, t: f64) -> f64 {
        match *self {
            Map::Sqrt { e, dir, .. } => e + dir * t * t,
            Map::Exp { e, d0, dir } => e + dir * d0 * (-t).exp(),
            Map::Lin { a, b } => a + t * (b - a),
        }
    }

    fn dphi_abs(&self, t: f64) -> f64 {
        match *self {
            Map::Sqrt { .. } => 2.0 * t,
            Map::Exp { d0, .. } => d0 * (-t).exp(),
            Map::Lin { a, b } => (b - a).abs(),
        }
    }

    fn t_of(&self, phi: f64) -> f64 {
        match *self {
            Map::Sqrt { e, dir, .. } => ((phi - e) / dir).max(0.0).sqrt(),
            Map::Exp { e, d0, dir } => (d0 / ((phi - e) * dir)).ln(),
            Map::Lin { a, b } => (phi - a) / (b - a),
        }
    }

    fn anchor(&self) -> Option<f64> {
        match *self {
            Map::Sqrt { e, .. } | Map::Exp { e, .. } => Some(e),
            Map::Lin { .. } => None,
        }
    }
}

/// V(phi) measured from the map's anchor equilibrium.
fn v_along(pot: &dyn Potential, map: &Map, phi: f64) -> f64 {
    match map.anchor() {
        Some(e) if phi >= e => pot.v_between(e, phi),
        Some(e) => -pot.v_between(phi, e),
        None => pot.v(phi),
    }
}

/// dX/dt; NaN when V is not positive. The offset from the anchor is taken from the
/// represented Phi so that V and dPhi stay consistent near the equilibrium.
fn x_prime(pot: &dyn Potential, map: &Map, t: f64) -> f64 {
    let phi = map.phi(t);
    let v = v_along(pot, map, phi);
    match *map {
        Map::Sqrt { e, slope, .. } => {
            let d = (phi - e).abs();
            if d == 0.0 {
                return (2.0 / slope).sqrt();
            }
            let r = if v > 0.0 { v / d } else { slope };
            (2.0 / r).sqrt()
        }
        Map::Exp { e, .. } => {
            if v > 0.0 {
                (phi - e).abs() / (2.0 * v).sqrt()
            } else {
                f64::NAN
            }
        }
        Map::Lin { .. } => {
            if v > 0.0 {
                map.dphi_abs(t) / (2.0 * v).sqrt()
            } else {
                f64::NAN
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Segment {
    map: Map,
    /// Parameter nodes in path order (may decrease).
    t: Vec<f64>,
    /// Cumulative X along the whole path at the nodes.
    x: Vec<f64>,
    guess: Option<Pchip>,
}

/// One monotone branch: Phi as a function of the distance X travelled from `from`.
#[derive(Clone)]
pub struct PhiPath {
    pot: Arc<dyn Potential>,
    segs: Vec<Segment>,
    /// (Phi, X) at interior kinks of dv.
    pub kinks: Vec<(f64, f64)>,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Regular,
    Simple(f64),
    Quadratic,
}

fn end_type(pot: &dyn Potential, e: f64, tol: f64) -> End {
    let amp = pot.amplitude();
    if (e == 0.0 || e == amp) && pot.v(e).abs() <= tol {
        let s = pot.dv(e).abs();
        if s > SLOPE_TOL {
            End::Simple(s)
        } else {
            End::Quadratic
        }
    } else {
        End::Regular
    }
}

impl PhiPath {
    pub fn new(
        pot: Arc<dyn Potential>,
        from: f64,
        to: f64,
        settings: &ProfileSettings,
    ) -> Result<PhiPath> {
        settings.validate()?;
        let mut path = PhiPath {
            pot: pot.clone(),
            segs: Vec::new(),
            kinks: Vec::new(),
            from,
            to,
        };
        if from == to {
            return Ok(path);
        }
        let amp = pot.amplitude();
        let tol = EQUILIBRIUM_TOL * v_scale(pot.as_ref()).max(f64::MIN_POSITIVE);
        let stop = settings.eps_tail * amp;
        let m = 0.5 * (from + to);
        let (ef, et) = (
            end_type(pot.as_ref(), from, tol),
            end_type(pot.as_ref(), to, tol),
        );
        // (map, t_start, t_end) in path order
        let mut parts: Vec<(Map, f64, f64)> = Vec::new();
        if ef == End::Regular && et == End::Regular {
            parts.push((Map::Lin { a: from, b: to }, 0.0, 1.0));
        } else {
            let dir_f = (m - from).signum();
            parts.push(match ef {
                End::Regular => (Map::Lin { a: from, b: m }, 0.0, 1.0),
                End::Simple(s) => (
                    Map::Sqrt {
                        e: from,
                        dir: dir_f,
                        slope: s,
                    },
                    0.0,
                    (m - from).abs().sqrt(),
                ),
                End::Quadratic => {
                    let d0 = (m - from).abs();
                    (
                        Map::Exp {
                            e: from,
                            d0,
                            dir: dir_f,
                        },
                        (d0 / stop).ln(),
                        0.0,
                    )
                }
            });
            let dir_t = (m - to).signum();
            parts.push(match et {
                End::Regular => (Map::Lin { a: m, b: to }, 0.0, 1.0),
                End::Simple(s) => (
                    Map::Sqrt {
                        e: to,
                        dir: dir_t,
                        slope: s,
                    },
                    (m - to).abs().sqrt(),
                    0.0,
                ),
                End::Quadratic => {
                    let d0 = (m - to).abs();
                    (
                        Map::Exp {
                            e: to,
                            d0,
                            dir: dir_t,
                        },
                        0.0,
                        (d0 / stop).ln(),
                    )
                }
            });
        }
        let kinks = pot.kinks();
        let q = settings.quad();
        let mut x0 = 0.0;
        for (map, ta, tb) in parts {
            if !(tb - ta).is_finite() || (tb - ta).abs() == 0.0 {
                return Err(Error::Numerical(
                    "degenerate profile segment (eps_tail too large?)".into(),
                ));
            }
            let n = settings.nodes_per_segment;
            let mut t: Vec<f64> = (0..=n)
                .map(|i| ta + (tb - ta) * i as f64 / n as f64)
                .collect();
            let (plo, phi_hi) = {
                let (p1, p2) = (map.phi(ta), map.phi(tb));
                (p1.min(p2), p1.max(p2))
            };
            let mut seg_kinks = Vec::new();
            for &k in &kinks {
                if k > plo && k < phi_hi {
                    let tk = map.t_of(k);
                    if tk.is_finite() {
                        t.push(tk);
                        seg_kinks.push((k, tk));
                    }
                }
            }
            if tb > ta {
                t.sort_by(f64::total_cmp);
            } else {
                t.sort_by(|a, b| b.total_cmp(a));
            }
            t.dedup();
            let f = |s: f64| x_prime(pot.as_ref(), &map, s);
            let mut x = Vec::with_capacity(t.len());
            x.push(x0);
            for w in t.windows(2) {
                let r = integrate(&f, w[0].min(w[1]), w[0].max(w[1]), &q);
                if !r.value.is_finite() {
                    return Err(Error::Condition(format!(
                        "potential not positive between Phi = {} and Phi = {}",
                        map.phi(w[0]),
                        map.phi(w[1])
                    )));
                }
                x0 += r.value;
                x.push(x0);
            }
            for (k, tk) in seg_kinks {
                if let Some(i) = t.iter().position(|v| *v == tk) {
                    path.kinks.push((k, x[i]));
                }
            }
            let guess = {
                let mut xs = Vec::new();
                let mut ts = Vec::new();
                for (xi, ti) in x.iter().zip(&t) {
                    if xs.last().is_none_or(|l: &f64| *xi > *l) {
                        xs.push(*xi);
                        ts.push(*ti);
                    }
                }
                if xs.len() >= 2 {
                    Some(Pchip::new(xs, ts))
                } else {
                    None
                }
            };
            path.segs.push(Segment { map, t, x, guess });
        }
        Ok(path)
    }

    /// Total X length of the branch.
    pub fn length(&self) -> f64 {
        self.segs.last().map_or(0.0, |s| *s.x.last().unwrap())
    }

    /// (Phi, X) nodes of the table in path order.
    pub fn table(&self) -> (Vec<f64>, Vec<f64>) {
        let mut phi = Vec::new();
        let mut x = Vec::new();
        for (k, s) in self.segs.iter().enumerate() {
            let skip = if k == 0 { 0 } else { 1 };
            for (t, xv) in s.t.iter().zip(&s.x).skip(skip) {
                phi.push(s.map.phi(*t));
                x.push(*xv);
            }
        }
        (phi, x)
    }

    /// Phi at distance x along the branch (clamped to the branch).
    pub fn phi_at(&self, x: f64) -> f64 {
        if self.segs.is_empty() {
            return self.from;
        }
        let k = self
            .segs
            .iter()
            .position(|s| x <= *s.x.last().unwrap())
            .unwrap_or(self.segs.len() - 1);
        let s = &self.segs[k];
        let x = x.clamp(s.x[0], *s.x.last().unwrap());
        let i =
            s.x.partition_point(|v| *v <= x)
                .saturating_sub(1)
                .min(s.x.len() - 2);
        s.map.phi(self.solve_t(s, i, x))
    }

    fn solve_t(&self, s: &Segment, i: usize, x: f64) -> f64 {
        let (ta, tb) = (s.t[i], s.t[i + 1]);
        let (xa, xb) = (s.x[i], s.x[i + 1]);
        if x <= xa {
            return ta;
        }
        if x >= xb {
            return tb;
        }
        let f = |u: f64| x_prime(self.pot.as_ref(), &s.map, u);
        let sign = (tb - ta).signum();
        let (mut lo, mut hi) = (ta, tb);
        let mut t = match &s.guess {
            Some(p) => p.eval(x),
            None => ta + (tb - ta) * (x - xa) / (xb - xa),
        };
        let inside = |v: f64, a: f64, b: f64| v > a.min(b) && v < a.max(b);
        if !inside(t, lo, hi) {
            t = ta + (tb - ta) * (x - xa) / (xb - xa);
        }
        let xtol = 1e-15 * x.abs().max(1.0);
        for _ in 0..60 {
            let (val, _) = gk15(&f, ta.min(t), ta.max(t));
            let r = xa + val - x;
            if r.abs() <= xtol {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = sign * f(t);
            let mut tn = t - r / d;
            if !inside(tn, lo, hi) || !tn.is_finite() {
                tn = 0.5 * (lo + hi);
            }
            if (tn - t).abs() <= 1e-16 * t.abs().max(1e-300) {
                t = tn;
                break;
            }
            t = tn;
        }
        t
    }
}

/// Table of (Phi_i, X_i) with X measured from `from_phi`.
pub fn x_of_phi(
    pot: Arc<dyn Potential>,
    from_phi: f64,
    to_phi: f64,
    settings: &ProfileSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if from_phi == to_phi {
        return Ok((Vec::new(), Vec::new()));
    }
    Ok(PhiPath::new(pot, from_phi, to_phi, settings)?.table())
}

#[derive(Clone)]
pub struct WaveProfile {
    pub kind: WaveKind,
    pub amplitude: f64,
    pub period: Option<f64>,
    pub truncation: Option<f64>,
    pub eps_tail: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub pot: Arc<dyn Potential>,
    branches: Vec<PhiPath>,
}

impl std::fmt::Debug for WaveProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveProfile")
            .field("kind", &self.kind)
            .field("amplitude", &self.amplitude)
            .field("period", &self.period)
            .field("truncation", &self.truncation)
            .field("points", &self.x.len())
            .finish()
    }
}

fn require_exists(pot: &dyn Potential, kind: WaveKind) -> Result<()> {
    if pot.kind() != kind {
        return Err(Error::Input(format!(
            "expected a {kind} potential, got {}",
            pot.kind()
        )));
    }
    let r = check_exists(pot);
    if !r.exists() {
        let detail: Vec<String> = r
            .clauses
            .iter()
            .filter(|c| !c.ok)
            .map(|c| format!("{}: {}", c.label, c.detail))
            .collect();
        return Err(Error::Condition(detail.join("; ")));
    }
    Ok(())
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl WaveProfile {
    fn assemble(mut self, x: Vec<f64>) -> Self {
        self.phi = x.iter().map(|v| self.phi_at(*v)).collect();
        self.dphi = x
            .iter()
            .zip(&self.phi)
            .map(|(xv, p)| self.dphi_from(*xv, *p))
            .collect();
        self.x = x;
        self
    }

    /// V measured from the nearer equilibrium end.
    pub fn v_stable(&self, phi: f64) -> f64 {
        let amp = self.amplitude;
        if phi > 0.5 * amp {
            -self.pot.v_between(phi, amp)
        } else {
            self.pot.v_between(0.0, phi)
        }
    }

    fn dphi_from(&self, x: f64, phi: f64) -> f64 {
        let mag = (2.0 * self.v_stable(phi).max(0.0)).sqrt();
        match self.kind {
            WaveKind::Solitary => {
                if x > 0.0 {
                    -mag
                } else if x < 0.0 {
                    mag
                } else {
                    0.0
                }
            }
            WaveKind::Shock => -mag,
            WaveKind::Train => {
                let g = self.period.unwrap();
                let r = x.rem_euclid(g);
                if r == 0.0 || r == 0.5 * g {
                    0.0
                } else if r < 0.5 * g {
                    mag
                } else {
                    -mag
                }
            }
        }
    }

    /// Phi at any X (clamped to the truncated range for solitary waves and shocks).
    pub fn phi_at(&self, x: f64) -> f64 {
        match self.kind {
            WaveKind::Solitary => self.branches[0].phi_at(x.abs()),
            WaveKind::Shock => {
                if x < 0.0 {
                    self.branches[0].phi_at(-x)
                } else {
                    self.branches[1].phi_at(x)
                }
            }
            WaveKind::Train => {
                let g = self.period.unwrap();
                let r = x.rem_euclid(g);
                self.branches[0].phi_at(r.min(g - r))
            }
        }
    }

    pub fn dphi_at(&self, x: f64) -> f64 {
        self.dphi_from(x, self.phi_at(x))
    }

    /// X positions inside the grid where Phi'' is not smooth (kinks of dv and branch joins).
    pub fn singular_x(&self) -> Vec<f64> {
        let (lo, hi) = (self.x[0], *self.x.last().unwrap());
        let mut out = vec![0.0];
        match self.kind {
            WaveKind::Solitary => {
                for (_, xk) in &self.branches[0].kinks {
                    out.push(*xk);
                    out.push(-*xk);
                }
            }
            WaveKind::Shock => {
                out.extend(self.branches[0].kinks.iter().map(|(_, xk)| -*xk));
                out.extend(self.branches[1].kinks.iter().map(|(_, xk)| *xk));
            }
            WaveKind::Train => {
                let g = self.period.unwrap();
                out.push(0.5 * g);
                out.push(g);
                for (_, xk) in &self.branches[0].kinks {
                    out.push(*xk);
                    out.push(g - *xk);
                }
            }
        }
        out.retain(|v| *v >= lo && *v <= hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Same profile sampled on a grid with `points_per_branch` per monotone branch.
    pub fn resampled(&self, points_per_branch: usize) -> WaveProfile {
        let n = 2 * points_per_branch - 1;
        let x = uniform(self.x[0], *self.x.last().unwrap(), n);
        self.clone().assemble(x)
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

pub fn build_solitary(pot: Arc<dyn Potential>, settings: &ProfileSettings) -> Result<WaveProfile> {
    require_exists(pot.as_ref(), WaveKind::Solitary)?;
    let beta = pot.amplitude();
    let path = PhiPath::new(pot.clone(), beta, 0.0, settings)?;
    let l = path.length();
    let p = WaveProfile {
        kind: WaveKind::Solitary,
        amplitude: beta,
        period: None,
        truncation: Some(l),
        eps_tail: settings.eps_tail,
        x: Vec::new(),
        phi: Vec::new(),
        dphi: Vec::new(),
        pot,
        branches: vec![path],
    };
    let n = settings.points_per_branch;
    let right = uniform(0.0, l, n);
    let mut x: Vec<f64> = right.iter().rev().map(|v| -v).collect();
    x.extend_from_slice(&right[1..]);
    Ok(p.assemble(x))
}

pub fn build_shock(pot: Arc<dyn Potential>, settings: &ProfileSettings) -> Result<WaveProfile> {
    require_exists(pot.as_ref(), WaveKind::Shock)?;
    let phi_l = pot.amplitude();
    let mid = 0.5 * phi_l;
    let left = PhiPath::new(pot.clone(), mid, phi_l, settings)?;
    let right = PhiPath::new(pot.clone(), mid, 0.0, settings)?;
    let l = left.length().min(right.length());
    let p = WaveProfile {
        kind: WaveKind::Shock,
        amplitude: phi_l,
        period: None,
        truncation: Some(l),
        eps_tail: settings.eps_tail,
        x: Vec::new(),
        phi: Vec::new(),
        dphi: Vec::new(),
        pot,
        branches: vec![left, right],
    };
    let x = uniform(-l, l, 2 * settings.points_per_branch - 1);
    Ok(p.assemble(x))
}

pub fn build_train(pot: Arc<dyn Potential>, settings: &ProfileSettings) -> Result<WaveProfile> {
    require_exists(pot.as_ref(), WaveKind::Train)?;
    let beta = pot.amplitude();
    let path = PhiPath::new(pot.clone(), 0.0, beta, settings)?;
    let gamma = 2.0 * path.length();
    let p = WaveProfile {
        kind: WaveKind::Train,
        amplitude: beta,
        period: Some(gamma),
        truncation: None,
        eps_tail: settings.eps_tail,
        x: Vec::new(),
        phi: Vec::new(),
        dphi: Vec::new(),
        pot,
        branches: vec![path],
    };
    let x = uniform(0.0, gamma, 2 * settings.points_per_branch - 1);
    Ok(p.assemble(x))
}

/// gamma = 2 int_0^beta dPhi / sqrt(2 V); both ends must be simple zeros.
pub fn period(pot: Arc<dyn Potential>, settings: &ProfileSettings) -> Result<f64> {
    let amp = pot.amplitude();
    let tol = EQUILIBRIUM_TOL * v_scale(pot.as_ref()).max(f64::MIN_POSITIVE);
    for e in [0.0, amp] {
        match end_type(pot.as_ref(), e, tol) {
            End::Simple(_) => {}
            End::Quadratic => {
                return Err(Error::Condition(format!("divergent endpoint at Phi = {e}")))
            }
            End::Regular => {
                return Err(Error::Condition(format!("Phi = {e} is not an equilibrium")))
            }
        }
    }
    Ok(2.0 * PhiPath::new(pot, 0.0, amp, settings)?.length())
}

/// max |Phi'^2 - 2 V(Phi)| / max(1, 2 V) over interior nodes, with Phi' from a
/// Richardson-extrapolated central difference of the inverted profile. Nodes at
/// non-smooth points are skipped.
pub fn energy_residual(p: &WaveProfile) -> f64 {
    let spacing = p.spacing();
    let sing = p.singular_x();
    let n = p.x.len();
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let x = p.x[i];
        let dist = sing
            .iter()
            .map(|s| (s - x).abs())
            .fold(f64::INFINITY, f64::min);
        if dist <= 1e-9 * spacing {
            continue;
        }
        // Phi''' is unbounded at the singular points; shrink the stencil next to them.
        let h = (0.5 * spacing).min(0.25 * dist);
        let d = |k: f64| (p.phi_at(x + k) - p.phi_at(x - k)) / (2.0 * k);
        let dphi = (4.0 * d(0.5 * h) - d(h)) / 3.0;
        let v2 = 2.0 * p.v_stable(p.phi[i]);
        worst = worst.max((dphi * dphi - v2).abs() / v2.abs().max(1.0));
    }
    worst
}

/// Midpoint check of (dPhi/dX)^2 = 2V from grid differences, relative to max 2V, over nodes
/// with Phi in [lo_frac, hi_frac] * amplitude.
pub fn fd_energy_residual(
    p: &WaveProfile,
    lo_frac: f64,
    hi_frac: f64,
    relative_pointwise: bool,
) -> f64 {
    let amp = p.amplitude;
    let vmax = p
        .phi
        .iter()
        .map(|phi| 2.0 * p.pot.v(*phi))
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..p.x.len() - 1 {
        let h = p.x[i + 1] - p.x[i];
        let xm = 0.5 * (p.x[i] + p.x[i + 1]);
        let pm = p.phi_at(xm);
        if pm < lo_frac * amp || pm > hi_frac * amp {
            continue;
        }
        let d = (p.phi[i + 1] - p.phi[i]) / h;
        let v2 = 2.0 * p.v_stable(pm);
        let den = if relative_pointwise { v2 } else { vmax };
        worst = worst.max((d * d - v2).abs() / den.max(f64::MIN_POSITIVE));
    }
    worst
}
