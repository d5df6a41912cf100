//! Phase-space distributions rebuilt along characteristics, shock end-state maps
//! and residual verifiers for assembled profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_symmetry, default_symmetry_tol, Marginal, PlasmaParams};
use crate::profile::WaveProfile;
use crate::quad::{integrate, integrate_sqrt_ends, QuadSettings};
use crate::sagdeev::{SagdeevPotential, WaveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LToR,
    RToL,
}

/// F(X, xi1) sampled on a tensor grid, row-major in X.
#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    pub species: Species,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn slice(&self, i: usize) -> &[f64] {
        let n = self.xi.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Trapezoid mass of each X-slice.
    pub fn slice_norms(&self) -> Vec<f64> {
        (0..self.x.len())
            .map(|i| {
                let f = self.slice(i);
                self.xi
                    .windows(2)
                    .zip(f.windows(2))
                    .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                    .sum()
            })
            .collect()
    }
}

pub(crate) fn sagdeev_of(p: &WaveProfile) -> Result<&SagdeevPotential> {
    p.pot
        .as_sagdeev()
        .ok_or_else(|| Error::Input("reconstruction needs a potential built from marginals".into()))
}

/// F(X, xi1) at a point where Phi(X) = phi.
pub fn phase_value(pot: &SagdeevPotential, species: Species, phi: f64, xi: f64) -> f64 {
    let p = &pot.params;
    let u = xi - p.alpha;
    match species {
        Species::Minus => {
            if u == 0.0 {
                return 0.0;
            }
            pot.g_minus
                .eval(p.alpha + u.signum() * (u * u + 2.0 * p.q_minus * phi).sqrt())
        }
        Species::Plus => match pot.kind {
            WaveKind::Shock => {
                if u == 0.0 {
                    return 0.0;
                }
                pot.g_plus.eval(
                    p.alpha + u.signum() * (u * u + 2.0 * p.q_plus * (pot.amplitude - phi)).sqrt(),
                )
            }
            _ => {
                let w = u * u - 2.0 * p.q_plus * phi;
                if w > 0.0 {
                    pot.g_plus.eval(p.alpha + u.signum() * w.sqrt())
                } else if w < 0.0 {
                    pot.trapped
                        .eval(p.alpha + (w + 2.0 * p.q_plus * pot.amplitude).sqrt())
                } else {
                    0.0
                }
            }
        },
    }
}

/// Shifted variable u at which the phase density jumps or has a square-root edge, for level phi.
fn phase_points(pot: &SagdeevPotential, species: Species, phi: f64) -> (Vec<f64>, Vec<f64>) {
    let p = &pot.params;
    let a = p.alpha;
    let mut pts = vec![0.0];
    let mut edges = Vec::new();
    let push_pair = |v: f64, pts: &mut Vec<f64>| {
        if v.is_finite() {
            pts.push(v);
        }
    };
    match species {
        Species::Minus => {
            let c = 2.0 * p.q_minus * phi;
            for b in pot.g_minus.breakpoints() {
                let ub = b - a;
                if ub * ub > c {
                    push_pair(ub.signum() * (ub * ub - c).sqrt(), &mut pts);
                }
            }
        }
        Species::Plus => match pot.kind {
            WaveKind::Shock => {
                let c = 2.0 * p.q_plus * (pot.amplitude - phi);
                for b in pot.g_plus.breakpoints() {
                    let ub = b - a;
                    if ub * ub > c {
                        push_pair(ub.signum() * (ub * ub - c).sqrt(), &mut pts);
                    }
                }
            }
            _ => {
                let c = 2.0 * p.q_plus * phi;
                let e = c.sqrt();
                edges.extend([-e, e]);
                for b in pot.g_plus.breakpoints() {
                    let ub = b - a;
                    push_pair(ub.signum() * (ub * ub + c).sqrt(), &mut pts);
                }
                let cb = 2.0 * p.q_plus * pot.amplitude;
                for b in pot.trapped.breakpoints() {
                    let ub = b - a;
                    let u2 = ub * ub + c - cb;
                    if u2 >= 0.0 && u2 < c {
                        push_pair(u2.sqrt(), &mut pts);
                        push_pair(-u2.sqrt(), &mut pts);
                    }
                }
            }
        },
    }
    pts.extend(edges.iter().copied());
    (pts, edges)
}

fn extent(pot: &SagdeevPotential, species: Species) -> f64 {
    let p = &pot.params;
    let reach = |g: &Marginal| {
        g.support().map_or(0.0, |(lo, hi)| {
            (lo - p.alpha).abs().max((hi - p.alpha).abs())
        })
    };
    match species {
        Species::Minus => reach(&pot.g_minus),
        Species::Plus => {
            let band = (2.0 * p.q_plus * pot.amplitude).sqrt();
            reach(&pot.g_plus).hypot(band).max(band)
        }
    }
}

/// int F(X, xi1) dxi1 over a slice with Phi(X) = phi.
pub fn slice_density(pot: &SagdeevPotential, species: Species, phi: f64, s: &QuadSettings) -> f64 {
    let a = pot.params.alpha;
    let big = extent(pot, species) * 1.000001 + 1e-12;
    let (mut pts, edges) = phase_points(pot, species, phi);
    pts.retain(|v| v.abs() < big);
    pts.extend([-big, big]);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |u: f64| phase_value(pot, species, phi, a + u);
    pts.windows(2)
        .map(|w| {
            let l = edges.contains(&w[0]);
            let r = edges.contains(&w[1]);
            integrate_sqrt_ends(&f, w[0], w[1], l, r, s)
        })
        .sum()
}

/// rho of the potential for the species at level phi.
pub fn species_density(pot: &SagdeevPotential, species: Species, phi: f64) -> f64 {
    match species {
        Species::Plus => pot.rho_plus(phi),
        Species::Minus => pot.rho_minus(phi),
    }
}

/// Samples F on `nx` X-slices drawn evenly from the profile grid and `nxi` uniform xi1 values
/// (plus the images of marginal breakpoints at the extreme levels).
pub fn reconstruct(
    profile: &WaveProfile,
    species: Species,
    nx: usize,
    nxi: usize,
) -> Result<PhaseDistribution> {
    let pot = sagdeev_of(profile)?;
    if nx < 2 || nxi < 2 {
        return Err(Error::Input(
            "reconstruction needs at least two X and two xi1 values".into(),
        ));
    }
    let n = profile.x.len();
    let mut idx: Vec<usize> = (0..nx).map(|i| i * (n - 1) / (nx - 1)).collect();
    idx.dedup();
    let x: Vec<f64> = idx.iter().map(|i| profile.x[*i]).collect();
    let a = pot.params.alpha;
    let u = extent(pot, species) * 1.05 + 1e-12;
    let mut xi: Vec<f64> = (0..nxi)
        .map(|i| a - u + 2.0 * u * i as f64 / (nxi - 1) as f64)
        .collect();
    for level in [0.0, profile.amplitude] {
        xi.extend(
            phase_points(pot, species, level)
                .0
                .iter()
                .filter(|v| v.abs() < u)
                .map(|v| a + v),
        );
    }
    xi.sort_by(f64::total_cmp);
    xi.dedup();
    let values: Vec<f64> = idx
        .par_iter()
        .flat_map_iter(|i| {
            let phi = profile.phi[*i];
            xi.iter().map(move |v| phase_value(pot, species, phi, *v))
        })
        .collect();
    Ok(PhaseDistribution {
        species,
        x,
        xi,
        values,
    })
}

/// max over profile nodes of |int F dxi1 - rho(Phi)| / (1 + rho).
pub fn density_recovery(profile: &WaveProfile, species: Species, stride: usize) -> Result<f64> {
    let pot = sagdeev_of(profile)?;
    let s = QuadSettings::with_tol(1e-12, 1e-15);
    let stride = stride.max(1);
    let worst = profile
        .phi
        .par_iter()
        .step_by(stride)
        .map(|phi| {
            let rho = species_density(pot, species, *phi);
            (slice_density(pot, species, *phi, &s) - rho).abs() / (1.0 + rho.abs())
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Samples pairs of phase points on one characteristic and returns max |F1 - F2|.
pub fn verify_characteristics(
    dist: &PhaseDistribution,
    profile: &WaveProfile,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let pot = sagdeev_of(profile)?;
    let p = &pot.params;
    let a = p.alpha;
    let species = dist.species;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xlo, xhi) = (dist.xi[0], *dist.xi.last().unwrap());
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut tries = 0;
    while done < n_samples && tries < 100 * n_samples.max(1) {
        tries += 1;
        let x1 = dist.x[rng.gen_range(0..dist.x.len())];
        let x2 = dist.x[rng.gen_range(0..dist.x.len())];
        let (p1, p2) = (profile.phi_at(x1), profile.phi_at(x2));
        let u1 = rng.gen_range(xlo..xhi) - a;
        // invariant e = u^2/2 - q+ Phi for ions, u^2/2 + q- Phi for electrons
        let (e, q) = match species {
            Species::Plus => (0.5 * u1 * u1 - p.q_plus * p1, -p.q_plus),
            Species::Minus => (0.5 * u1 * u1 + p.q_minus * p1, p.q_minus),
        };
        let w2 = 2.0 * (e - q * p2);
        if w2 < 0.0 {
            continue;
        }
        let trapped = species == Species::Plus && pot.kind != WaveKind::Shock && e < 0.0;
        let sign = if trapped {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        } else {
            u1.signum()
        };
        let u2 = sign * w2.sqrt();
        let f1 = phase_value(pot, species, p1, a + u1);
        let f2 = phase_value(pot, species, p2, a + u2);
        worst = worst.max((f1 - f2).abs());
        done += 1;
    }
    Ok(worst)
}

/// Marginal on the other side of a shock implied by energy conservation across the front.
/// Where the target is not determined (the reflection band) it is zero.
pub fn shock_endstate_map(
    g: &Marginal,
    params: &PlasmaParams,
    phi_l: f64,
    direction: Direction,
    species: Species,
) -> Result<Marginal> {
    if !(phi_l > 0.0 && phi_l.is_finite()) {
        return Err(Error::Domain("Phi_l must be positive".into()));
    }
    let a = params.alpha;
    let q = match species {
        Species::Plus => params.q_plus,
        Species::Minus => params.q_minus,
    };
    let band = 2.0 * q * phi_l;
    // ions cross left to right and electrons right to left with the band reflected
    let determined = matches!(
        (species, direction),
        (Species::Plus, Direction::LToR) | (Species::Minus, Direction::RToL)
    );
    if determined && !check_symmetry(g, a, band.sqrt(), default_symmetry_tol(g)) {
        return Err(Error::Condition(
            "source state is not symmetric on the reflection band".into(),
        ));
    }
    if g.is_zero() {
        return Ok(Marginal::zero());
    }
    // out(a + w) = g(a + sign(w) sqrt(w^2 + band)) when determined,
    // out(a + u) = g(a + sign(u) sqrt(u^2 - band)) for |u| > sqrt(band) otherwise
    match g {
        Marginal::Piecewise(pieces) => {
            let e = band.sqrt();
            let mut out = Vec::new();
            for pc in pieces {
                let (lo, hi) = (pc.lo - a, pc.hi - a);
                let mut push = |l: f64, h: f64| {
                    if h > l {
                        out.push((a + l, a + h, pc.height));
                    }
                };
                if determined {
                    let img = |u: f64| u.signum() * (u * u - band).max(0.0).sqrt();
                    if lo < -e {
                        push(img(lo), img(hi.min(-e)));
                    }
                    if hi > e {
                        push(img(lo.max(e)), img(hi));
                    }
                } else {
                    if lo < 0.0 {
                        let h = if hi < 0.0 {
                            -(hi * hi + band).sqrt()
                        } else {
                            -e
                        };
                        push(-(lo * lo + band).sqrt(), h);
                    }
                    if hi > 0.0 {
                        let l = if lo > 0.0 { (lo * lo + band).sqrt() } else { e };
                        push(l, (hi * hi + band).sqrt());
                    }
                }
            }
            Marginal::piecewise(&out)
        }
        _ => {
            // inverse map of the target variable back to the source
            let back = |v: f64| -> f64 {
                if determined {
                    g.eval(a + v.signum() * (v * v + band).sqrt())
                } else {
                    let w2 = v * v - band;
                    if w2 > 0.0 {
                        g.eval(a + v.signum() * w2.sqrt())
                    } else {
                        0.0
                    }
                }
            };
            let (lo, hi) = g.support().unwrap();
            let r = (lo - a).abs().max((hi - a).abs());
            let reach = if determined { r } else { (r * r + band).sqrt() };
            let n = 8001;
            let mut knots: Vec<f64> = (0..n)
                .map(|i| -reach + 2.0 * reach * i as f64 / (n - 1) as f64)
                .collect();
            if !determined {
                knots.extend([-band.sqrt(), band.sqrt()]);
            }
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            let values: Vec<f64> = knots.iter().map(|v| back(*v)).collect();
            Marginal::tabulated(knots.iter().map(|v| a + v).collect(), values)
        }
    }
}

/// int over [a, b] of w(X) dv(Phi(X)) dX, split at the profile's non-smooth points.
fn integrate_source<W: Fn(f64) -> f64>(p: &WaveProfile, a: f64, b: f64, sing: &[f64], w: W) -> f64 {
    let s = QuadSettings {
        rel_tol: 1e-12,
        abs_tol: 1e-16,
        max_subdivisions: 64,
    };
    let mut pts = vec![a];
    pts.extend(sing.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    let f = |x: f64| w(x) * p.pot.dv(p.phi_at(x));
    pts.windows(2)
        .map(|q| integrate(&f, q[0], q[1], &s).value)
        .sum()
}

/// Poisson residual from the exact integrated form
/// Phi(X+h) - 2 Phi(X) + Phi(X-h) = int_{-h}^{h} (h - |s|) dv(Phi(X+s)) ds,
/// relative to h^2 max |dv| on the grid.
pub fn verify_poisson(p: &WaveProfile) -> f64 {
    let sing = p.singular_x();
    let h = p.spacing();
    let scale = p
        .phi
        .iter()
        .map(|v| p.pot.dv(*v).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
        * h
        * h;
    let n = p.x.len();
    (1..n - 1)
        .into_par_iter()
        .map(|i| {
            let x = p.x[i];
            let lhs = p.phi[i + 1] - 2.0 * p.phi[i] + p.phi[i - 1];
            let rhs = integrate_source(p, x - h, x + h, &sing, |y| h - (y - x).abs());
            (lhs - rhs).abs() / scale
        })
        .reduce(|| 0.0, f64::max)
}

/// int dv(Phi(X)) dX over the grid, which equals dPhi(right) - dPhi(left).
pub fn verify_neutrality(p: &WaveProfile) -> f64 {
    let sing = p.singular_x();
    p.x.par_windows(2)
        .map(|w| integrate_source(p, w[0], w[1], &sing, |_| 1.0))
        .sum::<f64>()
        .abs()
}

/// Every residual check for an assembled profile.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub poisson: f64,
    pub energy: f64,
    pub neutrality: f64,
    pub characteristics_plus: f64,
    pub characteristics_minus: f64,
    pub density_plus: f64,
    pub density_minus: f64,
}

impl Verification {
    pub fn characteristics(&self) -> f64 {
        self.characteristics_plus.max(self.characteristics_minus)
    }
}

pub fn verify_profile(p: &WaveProfile, seed: u64) -> Result<Verification> {
    let mut ch = [0.0; 2];
    let mut dens = [0.0; 2];
    for (k, sp) in [Species::Plus, Species::Minus].into_iter().enumerate() {
        let d = reconstruct(p, sp, 41, 201)?;
        ch[k] = verify_characteristics(&d, p, 2000, seed + k as u64)?;
        dens[k] = density_recovery(p, sp, 97)?;
    }
    Ok(Verification {
        poisson: verify_poisson(p),
        energy: crate::profile::energy_residual(p),
        neutrality: verify_neutrality(p),
        characteristics_plus: ch[0],
        characteristics_minus: ch[1],
        density_plus: dens[0],
        density_minus: dens[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_train, ProfileSettings};
    use crate::sagdeev::Potential;
    use std::sync::Arc;

    fn q() -> QuadSettings {
        QuadSettings::default()
    }

    fn box_train(beta: f64, tau: f64) -> SagdeevPotential {
        // ions: central box of height 1/sqrt2 on |u| < sqrt(2 tau); electrons: boxes at |u| in (sqrt(2 beta), sqrt(2(beta+tau)))
        let c = 1.0 / 2f64.sqrt();
        let r = (2.0 * tau).sqrt();
        let (lo, hi) = ((2.0 * beta).sqrt(), (2.0 * (beta + tau)).sqrt());
        let hp = Marginal::piecewise(&[(-r, r, c)]).unwrap();
        let hm = Marginal::piecewise(&[(-hi, -lo, c), (lo, hi, c)]).unwrap();
        SagdeevPotential::train(PlasmaParams::unit(0.0), hp, hm, Marginal::zero(), beta, q())
            .unwrap()
    }

    #[test]
    fn phase_formula_branches() {
        let pot = box_train(1.0, 1.0);
        let phi = 0.3;
        // untrapped ions: image of |u| > sqrt(0.6) lands in the box if u^2 - 0.6 < 2
        assert_eq!(
            phase_value(&pot, Species::Plus, phi, 1.0),
            1.0 / 2f64.sqrt()
        );
        assert_eq!(phase_value(&pot, Species::Plus, phi, 2.0), 0.0);
        // trapped band is empty of ions when G = 0
        assert_eq!(phase_value(&pot, Species::Plus, phi, 0.5), 0.0);
        let t = pot
            .with_trapped(Marginal::piecewise(&[(0.0, 2.0, 3.0)]).unwrap(), 1.0)
            .unwrap();
        assert_eq!(phase_value(&t, Species::Plus, phi, -0.5), 3.0);
        assert_eq!(
            phase_value(&t, Species::Plus, phi, 0.5),
            phase_value(&t, Species::Plus, phi, -0.5)
        );
    }

    #[test]
    fn slice_density_matches_closed_forms() {
        let pot = box_train(1.0, 1.0);
        let s = QuadSettings::with_tol(1e-12, 1e-15);
        for phi in [0.0, 0.1, 0.5, 0.9] {
            for sp in [Species::Plus, Species::Minus] {
                let got = slice_density(&pot, sp, phi, &s);
                let want = species_density(&pot, sp, phi);
                assert!((got - want).abs() < 1e-12, "{sp:?} {phi}: {got} {want}");
            }
        }
        // the electron boxes start exactly at the reflection speed: a rounding-limited sqrt edge
        let edge = slice_density(&pot, Species::Minus, 1.0, &s)
            - species_density(&pot, Species::Minus, 1.0);
        assert!(edge.abs() < 1e-7);
        let m = SagdeevPotential::solitary(
            PlasmaParams::unit(0.0),
            Marginal::maxwellian(1.0, 0.3, 1.0, 1.0).unwrap(),
            Marginal::maxwellian(1.0, 0.0, 2.0, 1.0).unwrap(),
            Marginal::zero(),
            0.5,
            q(),
        )
        .unwrap();
        for phi in [0.0, 0.2, 0.5] {
            for sp in [Species::Plus, Species::Minus] {
                let got = slice_density(&m, sp, phi, &s);
                let want = species_density(&m, sp, phi);
                assert!((got - want).abs() < 1e-9, "{sp:?} {phi}: {got} {want}");
            }
        }
        assert!((slice_density(&m, Species::Minus, 0.4, &s) - (-0.8f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn shock_maps() {
        let p = PlasmaParams::unit(0.0);
        let g =
            Marginal::piecewise(&[(-3.0, -2.0, 1.0), (-0.5, 0.5, 2.0), (2.0, 3.0, 1.0)]).unwrap();
        let r = shock_endstate_map(&g, &p, 1.0, Direction::LToR, Species::Plus).unwrap();
        // |u| in (2, 3) maps to |w| in (sqrt 2, sqrt 7); the core is reflected
        let want = Marginal::piecewise(&[
            (-7f64.sqrt(), -2f64.sqrt(), 1.0),
            (2f64.sqrt(), 7f64.sqrt(), 1.0),
        ])
        .unwrap();
        assert!(r.l1_distance(&want) < 1e-12);
        let back = shock_endstate_map(&r, &p, 1.0, Direction::RToL, Species::Plus).unwrap();
        for x in [-2.9, -2.1, 2.5, 2.99, 3.5] {
            assert_eq!(back.eval(x), g.eval(x), "{x}");
        }
        assert!(
            shock_endstate_map(&Marginal::zero(), &p, 1.0, Direction::LToR, Species::Plus)
                .unwrap()
                .is_zero()
        );
        let asym = Marginal::piecewise(&[(0.0, 0.5, 1.0)]).unwrap();
        assert!(shock_endstate_map(&asym, &p, 1.0, Direction::LToR, Species::Plus).is_err());
        // electrons: right to left is determined
        let e = Marginal::piecewise(&[(-2.0, 2.0, 1.0)]).unwrap();
        let l = shock_endstate_map(&e, &p, 0.5, Direction::RToL, Species::Minus).unwrap();
        let want = Marginal::piecewise(&[(-3f64.sqrt(), 3f64.sqrt(), 1.0)]).unwrap();
        assert!(l.l1_distance(&want) < 1e-12);
        let mw = Marginal::maxwellian(1.0, 0.0, 1.0, 1.0).unwrap();
        let tab = shock_endstate_map(&mw, &p, 0.5, Direction::LToR, Species::Plus).unwrap();
        assert!((tab.eval(1.0) - mw.eval(2f64.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn train_profile_verifiers() {
        let pot: Arc<dyn Potential> = Arc::new(box_train(1.0, 1.0));
        let p = build_train(pot, &ProfileSettings::default()).unwrap();
        assert!(verify_poisson(&p) < 1e-6);
        assert!(verify_neutrality(&p) < 1e-10);
        for sp in [Species::Plus, Species::Minus] {
            assert!(density_recovery(&p, sp, 97).unwrap() < 1e-8);
            let d = reconstruct(&p, sp, 41, 201).unwrap();
            assert!(d.values.iter().all(|v| *v >= 0.0));
            assert!(verify_characteristics(&d, &p, 2000, 7).unwrap() < 1e-8);
        }
    }

    #[test]
    fn poisson_detects_fault() {
        let pot: Arc<dyn Potential> = Arc::new(box_train(1.0, 1.0));
        let mut p = build_train(pot, &ProfileSettings::default()).unwrap();
        let k = p.phi.len() / 3;
        p.phi[k] += 1e-3;
        assert!(verify_poisson(&p) > 1e-2);
    }
}
