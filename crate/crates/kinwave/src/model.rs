//! Plasma parameters and one-dimensional velocity marginals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boltzmann {
    pub rho: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaParams {
    pub e_plus: f64,
    pub e_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boltzmann: Option<Boltzmann>,
}

fn one() -> u32 {
    1
}

impl PlasmaParams {
    /// Unit charges and couplings at wave speed `alpha`.
    pub fn unit(alpha: f64) -> PlasmaParams {
        PlasmaParams {
            e_plus: 1.0,
            e_minus: 1.0,
            q_plus: 1.0,
            q_minus: 1.0,
            alpha,
            n: 1,
            boltzmann: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.e_plus) && pos(self.e_minus) && pos(self.q_plus) && pos(self.q_minus)) {
            return Err(Error::Input(
                "charges and couplings must be finite and positive".into(),
            ));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Input("alpha must be finite".into()));
        }
        if self.n < 1 {
            return Err(Error::Input("velocity dimension must be at least 1".into()));
        }
        if let Some(b) = self.boltzmann {
            if !(pos(b.rho) && pos(b.kappa)) {
                return Err(Error::Input(
                    "Boltzmann rho and kappa must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

/// Number of standard deviations kept on each side of a Maxwellian.
pub const MAXWELLIAN_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Piecewise(Vec<Piece>),
    /// mass * sqrt(kappa/(2 pi q)) * exp(-kappa (x-center)^2 / (2 q))
    Maxwellian {
        mass: f64,
        center: f64,
        kappa: f64,
        q: f64,
    },
    /// Linear interpolation between knots, zero outside.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

/// JSON form of a marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MarginalSpec {
    Piecewise {
        pieces: Vec<[f64; 3]>,
    },
    Maxwellian {
        mass: f64,
        center: f64,
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
    },
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Marginal {
    pub fn zero() -> Marginal {
        Marginal::Piecewise(Vec::new())
    }

    pub fn piecewise(pieces: &[(f64, f64, f64)]) -> Result<Marginal> {
        let mut v: Vec<Piece> = pieces
            .iter()
            .map(|&(lo, hi, height)| Piece { lo, hi, height })
            .filter(|p| p.height != 0.0)
            .collect();
        for p in &v {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.height.is_finite()) {
                return Err(Error::Input(
                    "piece bounds and heights must be finite".into(),
                ));
            }
            if p.lo >= p.hi {
                return Err(Error::Input(format!("piece [{}, {}] is empty", p.lo, p.hi)));
            }
            if p.height < 0.0 {
                return Err(Error::Input("piece heights must be nonnegative".into()));
            }
        }
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in v.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::Input(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Marginal::Piecewise(v))
    }

    pub fn maxwellian(mass: f64, center: f64, kappa: f64, q: f64) -> Result<Marginal> {
        if !(mass >= 0.0 && mass.is_finite() && center.is_finite() && kappa > 0.0 && q > 0.0) {
            return Err(Error::Input(
                "maxwellian needs mass >= 0, finite center, kappa > 0, q > 0".into(),
            ));
        }
        Ok(Marginal::Maxwellian {
            mass,
            center,
            kappa,
            q,
        })
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Marginal> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Input(
                "tabulated marginal needs matching knots/values, at least two".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input(
                "tabulated knots must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Input(
                "tabulated values must be finite and nonnegative".into(),
            ));
        }
        Ok(Marginal::Tabulated { knots, values })
    }

    /// Build from JSON; a Maxwellian without `q` takes `q_default`.
    pub fn from_spec(spec: &MarginalSpec, q_default: f64) -> Result<Marginal> {
        match spec {
            MarginalSpec::Piecewise { pieces } => {
                let p: Vec<(f64, f64, f64)> = pieces.iter().map(|a| (a[0], a[1], a[2])).collect();
                Marginal::piecewise(&p)
            }
            MarginalSpec::Maxwellian {
                mass,
                center,
                kappa,
                q,
            } => Marginal::maxwellian(*mass, *center, *kappa, q.unwrap_or(q_default)),
            MarginalSpec::Tabulated { knots, values } => {
                Marginal::tabulated(knots.clone(), values.clone())
            }
        }
    }

    pub fn to_spec(&self) -> MarginalSpec {
        match self {
            Marginal::Piecewise(p) => MarginalSpec::Piecewise {
                pieces: p.iter().map(|p| [p.lo, p.hi, p.height]).collect(),
            },
            Marginal::Maxwellian {
                mass,
                center,
                kappa,
                q,
            } => MarginalSpec::Maxwellian {
                mass: *mass,
                center: *center,
                kappa: *kappa,
                q: Some(*q),
            },
            Marginal::Tabulated { knots, values } => MarginalSpec::Tabulated {
                knots: knots.clone(),
                values: values.clone(),
            },
        }
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self, Marginal::Piecewise(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Marginal::Piecewise(p) => p.is_empty(),
            Marginal::Maxwellian { mass, .. } => *mass == 0.0,
            Marginal::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Marginal::Piecewise(p) => {
                let k = p.partition_point(|q| q.hi < x);
                match p.get(k) {
                    Some(q) if q.lo <= x => q.height,
                    _ => 0.0,
                }
            }
            Marginal::Maxwellian {
                mass,
                center,
                kappa,
                q,
            } => {
                let d = x - center;
                let sigma = (q / kappa).sqrt();
                if d.abs() > MAXWELLIAN_CUTOFF * sigma {
                    return 0.0;
                }
                mass * (kappa / (2.0 * std::f64::consts::PI * q)).sqrt()
                    * (-kappa * d * d / (2.0 * q)).exp()
            }
            Marginal::Tabulated { knots, values } => {
                let n = knots.len();
                if x < knots[0] || x > knots[n - 1] {
                    return 0.0;
                }
                let k = knots.partition_point(|&v| v <= x).clamp(1, n - 1);
                let (x0, x1) = (knots[k - 1], knots[k]);
                let t = (x - x0) / (x1 - x0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }

    /// Total integral over the real line.
    pub fn mass(&self) -> f64 {
        match self {
            Marginal::Piecewise(p) => p.iter().map(|q| (q.hi - q.lo) * q.height).sum(),
            Marginal::Maxwellian { mass, .. } => *mass,
            Marginal::Tabulated { knots, values } => knots
                .windows(2)
                .zip(values.windows(2))
                .map(|(k, v)| 0.5 * (k[1] - k[0]) * (v[0] + v[1]))
                .sum(),
        }
    }

    /// Integral of x * g(x).
    pub fn first_moment(&self) -> f64 {
        match self {
            Marginal::Piecewise(p) => p
                .iter()
                .map(|q| 0.5 * (q.hi * q.hi - q.lo * q.lo) * q.height)
                .sum(),
            Marginal::Maxwellian { mass, center, .. } => mass * center,
            Marginal::Tabulated { knots, values } => knots
                .windows(2)
                .zip(values.windows(2))
                .map(|(k, v)| {
                    let h = k[1] - k[0];
                    h * (v[0] * (2.0 * k[0] + k[1]) + v[1] * (k[0] + 2.0 * k[1])) / 6.0
                })
                .sum(),
        }
    }

    /// Closed interval outside which the marginal vanishes; `None` for the zero marginal.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Marginal::Piecewise(p) => {
                if p.is_empty() {
                    None
                } else {
                    Some((p[0].lo, p[p.len() - 1].hi))
                }
            }
            Marginal::Maxwellian {
                mass,
                center,
                kappa,
                q,
            } => {
                if *mass == 0.0 {
                    None
                } else {
                    let s = MAXWELLIAN_CUTOFF * (q / kappa).sqrt();
                    Some((center - s, center + s))
                }
            }
            Marginal::Tabulated { knots, values } => {
                let first = values.iter().position(|v| *v > 0.0)?;
                let last = values.iter().rposition(|v| *v > 0.0)?;
                Some((
                    knots[first.saturating_sub(1)],
                    knots[(last + 1).min(knots.len() - 1)],
                ))
            }
        }
    }

    /// Points where the marginal is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Marginal::Piecewise(p) => p.iter().flat_map(|q| [q.lo, q.hi]).collect(),
            Marginal::Maxwellian { center, .. } => match self.support() {
                Some((a, b)) => vec![a, *center, b],
                None => vec![],
            },
            Marginal::Tabulated { knots, .. } => knots.clone(),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Marginal::Piecewise(p) => p.iter().map(|q| q.height).fold(0.0, f64::max),
            Marginal::Maxwellian { .. } => match self {
                Marginal::Maxwellian { center, .. } => self.eval(*center),
                _ => unreachable!(),
            },
            Marginal::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn scaled(&self, c: f64) -> Marginal {
        match self {
            Marginal::Piecewise(p) => {
                if c == 0.0 {
                    return Marginal::zero();
                }
                Marginal::Piecewise(
                    p.iter()
                        .map(|q| Piece {
                            height: q.height * c,
                            ..*q
                        })
                        .collect(),
                )
            }
            Marginal::Maxwellian {
                mass,
                center,
                kappa,
                q,
            } => Marginal::Maxwellian {
                mass: mass * c,
                center: *center,
                kappa: *kappa,
                q: *q,
            },
            Marginal::Tabulated { knots, values } => Marginal::Tabulated {
                knots: knots.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }

    /// Integral of g over [a, b].
    pub fn mass_on(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        match self {
            Marginal::Piecewise(p) => p
                .iter()
                .map(|q| (q.hi.min(b) - q.lo.max(a)).max(0.0) * q.height)
                .sum(),
            _ => {
                let (lo, hi) = match self.support() {
                    Some((lo, hi)) => (lo.max(a), hi.min(b)),
                    None => return 0.0,
                };
                if !(lo < hi) {
                    return 0.0;
                }
                let mut pts = vec![lo, hi];
                pts.extend(
                    self.breakpoints()
                        .into_iter()
                        .filter(|x| *x > lo && *x < hi),
                );
                pts.sort_by(f64::total_cmp);
                let f = |x: f64| self.eval(x);
                crate::quad::integrate_pts(&f, &pts, &crate::quad::QuadSettings::default()).value
            }
        }
    }

    /// Integral of |g1 - g2| on a dense grid over the union of supports.
    pub fn l1_distance(&self, other: &Marginal) -> f64 {
        let (a, b) = match (self.support(), other.support()) {
            (None, None) => return 0.0,
            (Some(s), None) | (None, Some(s)) => s,
            (Some(s), Some(t)) => (s.0.min(t.0), s.1.max(t.1)),
        };
        let n = 20000;
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let x = a + (i as f64 + 0.5) * h;
                (self.eval(x) - other.eval(x)).abs()
            })
            .sum::<f64>()
            * h
    }
}

/// Default pointwise tolerance for symmetry tests.
pub fn default_symmetry_tol(g: &Marginal) -> f64 {
    match g {
        Marginal::Tabulated { .. } => 1e-9,
        _ => 1e-12,
    }
}

fn mirrored_breaks(g: &Marginal, alpha: f64) -> Vec<f64> {
    let mut u: Vec<f64> = g
        .breakpoints()
        .iter()
        .map(|b| (b - alpha).abs())
        .filter(|u| *u > 0.0)
        .collect();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

/// True iff |g(alpha + u) - g(alpha - u)| <= tol * max(1, sup g) for sampled u in (0, delta).
/// Samples: midpoints between mirrored breakpoints plus a dense uniform grid.
pub fn check_symmetry(g: &Marginal, alpha: f64, delta: f64, tol: f64) -> bool {
    if !(delta > 0.0) {
        return true;
    }
    let scale = tol * g.sup().max(1.0);
    let mismatch = |u: f64| (g.eval(alpha + u) - g.eval(alpha - u)).abs() > scale;
    let finite = delta.is_finite();
    let mut pts = vec![0.0];
    pts.extend(
        mirrored_breaks(g, alpha)
            .into_iter()
            .filter(|u| !finite || *u < delta),
    );
    let end = if finite {
        delta
    } else {
        match g.support() {
            Some((a, b)) => (a - alpha).abs().max((b - alpha).abs()) * 1.01 + 1.0,
            None => return true,
        }
    };
    pts.push(end);
    for w in pts.windows(2) {
        if w[1] > w[0] && mismatch(0.5 * (w[0] + w[1])) {
            return false;
        }
    }
    let n = 4000;
    (1..n).all(|i| !mismatch(end * i as f64 / n as f64))
}

/// Largest trapping energy compatible with symmetry of `g_minus` about alpha; +inf when symmetric everywhere.
pub fn beta_star(g_minus: &Marginal, params: &PlasmaParams) -> f64 {
    let alpha = params.alpha;
    let tol = default_symmetry_tol(g_minus);
    let to_beta = |d: f64| d * d / (2.0 * params.q_minus);
    match g_minus {
        Marginal::Piecewise(_) => {
            let scale = tol * g_minus.sup().max(1.0);
            let mut pts = vec![0.0];
            pts.extend(mirrored_breaks(g_minus, alpha));
            for w in pts.windows(2) {
                let u = 0.5 * (w[0] + w[1]);
                if (g_minus.eval(alpha + u) - g_minus.eval(alpha - u)).abs() > scale {
                    return to_beta(w[0]);
                }
            }
            f64::INFINITY
        }
        _ => {
            let umax = match g_minus.support() {
                Some((a, b)) => (a - alpha).abs().max((b - alpha).abs()),
                None => return f64::INFINITY,
            };
            if check_symmetry(g_minus, alpha, umax, tol) {
                return f64::INFINITY;
            }
            let (mut lo, mut hi) = (0.0, umax);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if check_symmetry(g_minus, alpha, mid, tol) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            to_beta(lo)
        }
    }
}

/// Rejects trapped-ion marginals with mass at or left of alpha.
pub fn validate_trapped(g: &Marginal, alpha: f64) -> Result<()> {
    if let Some((lo, _)) = g.support() {
        if lo < alpha {
            return Err(Error::Input(format!(
                "trapped-ion marginal must vanish for xi1 <= alpha (support starts at {lo})"
            )));
        }
    }
    Ok(())
}
