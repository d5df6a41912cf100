//! Explicit families of non-unique waves and the Boltzmann wave-train period match.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_exists, v_scale, SLOPE_TOL};
use crate::densities;
use crate::error::{Error, Result};
use crate::model::{Marginal, MarginalSpec, Piece, PlasmaParams};
use crate::profile::{period, ProfileSettings};
use crate::quad::{brent, pow32_diff, QuadSettings};
use crate::sagdeev::{FnPotential, Potential, SagdeevPotential, WaveKind, WithTrapped};

/// Grid used for the dense clause checks.
const GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Perturb,
    InjectB,
    InjectC,
    TrainBox,
    BoltzmannMatch,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Option<FamilyKind> {
        Some(match s {
            "perturb" => FamilyKind::Perturb,
            "inject-b" => FamilyKind::InjectB,
            "inject-c" => FamilyKind::InjectC,
            "train-box" => FamilyKind::TrainBox,
            "boltzmann-match" => FamilyKind::BoltzmannMatch,
            _ => return None,
        })
    }
}

#[derive(Clone, Serialize)]
pub struct FamilyMember {
    pub family: FamilyKind,
    pub kind: WaveKind,
    pub params: PlasmaParams,
    /// Trapping energy (beta~ for the injections).
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_tau_beta: Option<f64>,
    /// Factor applied to every marginal by period rescaling.
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_plus: Option<MarginalSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_minus: Option<MarginalSpec>,
    pub trapped: MarginalSpec,
    pub verdict: String,
    #[serde(skip)]
    pub potential: Arc<dyn Potential>,
}

impl fmt::Debug for FamilyMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyMember")
            .field("family", &self.family)
            .field("beta", &self.beta)
            .field("tau", &self.tau)
            .field("lambda", &self.lambda)
            .field("period", &self.period)
            .finish()
    }
}

impl FamilyMember {
    fn new(
        family: FamilyKind,
        pot: Arc<dyn Potential>,
        params: PlasmaParams,
        trapped: &Marginal,
    ) -> FamilyMember {
        let sag = pot.as_sagdeev();
        FamilyMember {
            family,
            kind: pot.kind(),
            params,
            beta: pot.amplitude(),
            tau: None,
            lambda: None,
            k: None,
            alpha_star: None,
            alpha_zero: None,
            a_tau_beta: None,
            scale: 1.0,
            period: None,
            g_plus: sag.map(|s| s.g_plus.to_spec()),
            g_minus: sag.map(|s| s.g_minus.to_spec()),
            trapped: trapped.to_spec(),
            verdict: String::new(),
            potential: pot,
        }
    }

    pub fn sagdeev(&self) -> Option<&SagdeevPotential> {
        self.potential.as_sagdeev()
    }

    /// Runs the existence check; a member that fails it is an error.
    fn finish(mut self) -> Result<FamilyMember> {
        let rep = check_exists(self.potential.as_ref());
        if !rep.exists() {
            return Err(Error::Numerical(format!(
                "constructed {:?} member fails existence: {}",
                self.family,
                rep.failed.join(", ")
            )));
        }
        self.verdict = rep.verdict;
        if self.kind == WaveKind::Train {
            self.period = Some(period(self.potential.clone(), &ProfileSettings::default())?);
        }
        Ok(self)
    }
}

/// Untrapped part of a solitary wave: either marginals or a bare evaluator.
#[derive(Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Untrapped {
    Marginals(SagdeevPotential),
    Evaluator(Arc<dyn Potential>),
}

impl Untrapped {
    pub fn v(&self, phi: f64) -> f64 {
        match self {
            Untrapped::Marginals(p) => p.v_inf(phi),
            Untrapped::Evaluator(f) => f.v(phi),
        }
    }

    pub fn dv(&self, phi: f64) -> f64 {
        match self {
            Untrapped::Marginals(p) => p.dv_inf(phi),
            Untrapped::Evaluator(f) => f.dv(phi),
        }
    }

    fn with_trapped(
        &self,
        g: Marginal,
        beta: f64,
        params: &PlasmaParams,
    ) -> Result<Arc<dyn Potential>> {
        Ok(match self {
            Untrapped::Marginals(p) => Arc::new(p.with_trapped(g, beta)?),
            Untrapped::Evaluator(f) => Arc::new(WithTrapped {
                base: f.clone(),
                trapped: g,
                beta,
                params: *params,
                settings: QuadSettings::default(),
            }),
        })
    }
}

fn pieces(g: &Marginal) -> Result<&[Piece]> {
    match g {
        Marginal::Piecewise(p) => Ok(p),
        _ => Err(Error::Input(
            "perturbation requires a piecewise trapped marginal".into(),
        )),
    }
}

/// int_alpha^x G(xi) (xi - alpha)^2 over the pieces clipped to [alpha, top].
fn weight_pieces(g: &[Piece], alpha: f64, top: f64) -> Vec<(f64, f64, f64)> {
    g.iter()
        .filter_map(|p| {
            let (lo, hi) = (p.lo.max(alpha), p.hi.min(top));
            (hi > lo).then_some((lo, hi, p.height))
        })
        .collect()
}

fn cube(x: f64) -> f64 {
    x * x * x
}

/// x with int_alpha^x G (xi - alpha)^2 = target.
fn weighted_quantile(w: &[(f64, f64, f64)], alpha: f64, target: f64) -> f64 {
    let mut acc = 0.0;
    for &(lo, hi, h) in w {
        let m = h * (cube(hi - alpha) - cube(lo - alpha)) / 3.0;
        if acc + m >= target {
            return alpha
                + (cube(lo - alpha) + 3.0 * (target - acc) / h)
                    .cbrt()
                    .min(hi - alpha);
        }
        acc += m;
    }
    w.last().map_or(alpha, |p| p.1)
}

/// Trapped-ion perturbation of a solitary wave with trapped marginal G.
///
/// Moves the weighted mass of G on (alpha, alpha*) onto (alpha*, alpha0); the
/// trapped potential at beta is unchanged and grows everywhere else.
pub fn solitary_perturb(base: &SagdeevPotential, tau: f64) -> Result<FamilyMember> {
    if base.kind != WaveKind::Solitary {
        return Err(Error::Input(
            "perturbation applies to solitary waves".into(),
        ));
    }
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::Input(format!("tau = {tau} must lie in (0, 1/2)")));
    }
    let p = &base.params;
    let beta = base.amplitude;
    let alpha = p.alpha;
    let top = alpha + (2.0 * p.q_plus * beta).sqrt();
    let g = pieces(&base.trapped)?;
    let w = weight_pieces(g, alpha, top);
    let total: f64 = w
        .iter()
        .map(|&(lo, hi, h)| h * (cube(hi - alpha) - cube(lo - alpha)) / 3.0)
        .sum();
    if !(total > 0.0) {
        return Err(Error::Input("no trapped mass to perturb".into()));
    }
    let a_star = weighted_quantile(&w, alpha, tau * total);
    let a_zero = weighted_quantile(&w, alpha, 2.0 * tau * total);

    let mut out = Vec::new();
    for pc in g {
        let mut cuts = vec![pc.lo];
        cuts.extend(
            [alpha, a_star, a_zero]
                .into_iter()
                .filter(|c| *c > pc.lo && *c < pc.hi),
        );
        cuts.push(pc.hi);
        cuts.dedup();
        for s in cuts.windows(2) {
            let mid = 0.5 * (s[0] + s[1]);
            let h = if mid > alpha && mid < a_star {
                0.0
            } else if mid > a_star && mid < a_zero {
                2.0 * pc.height
            } else {
                pc.height
            };
            if h > 0.0 {
                out.push((s[0], s[1], h));
            }
        }
    }
    let gt = Marginal::piecewise(&out)?;
    let pot = base.with_trapped(gt.clone(), beta)?;

    let scale = v_scale(&pot).max(v_scale(base)).max(f64::MIN_POSITIVE);
    let dv0 = |phi: f64| pot.v0(phi) - base.v0(phi);
    if dv0(beta).abs() > 1e-12 * scale {
        return Err(Error::Numerical(format!(
            "trapped potential at beta moved by {:e}",
            dv0(beta)
        )));
    }
    if let Some(i) = (0..=GRID).find(|&i| dv0(beta * i as f64 / GRID as f64) < -1e-12 * scale) {
        return Err(Error::Numerical(format!(
            "dominance fails at Phi = {}",
            beta * i as f64 / GRID as f64
        )));
    }

    let mut m = FamilyMember::new(FamilyKind::Perturb, Arc::new(pot), *p, &gt);
    m.tau = Some(tau);
    m.alpha_star = Some(a_star);
    m.alpha_zero = Some(a_zero);
    m.finish()
}

/// Box of height 1/(2 e+ sqrt(2 q+)) on [alpha + lo, alpha + hi].
fn unit_box(p: &PlasmaParams, lo: f64, hi: f64) -> Result<Marginal> {
    Marginal::piecewise(&[(
        p.alpha + lo,
        p.alpha + hi,
        0.5 / (p.e_plus * (2.0 * p.q_plus).sqrt()),
    )])
}

fn slope_scale(base: &Untrapped, hi: f64) -> f64 {
    (0..=400)
        .map(|i| base.dv(hi * i as f64 / 400.0).abs())
        .fold(1.0, f64::max)
}

/// Trapped-ion injection when V-infinity crosses zero at beta_sharp with negative slope.
pub fn solitary_inject_case_b(
    base: &Untrapped,
    beta: f64,
    beta_sharp: f64,
    beta_star: f64,
    params: &PlasmaParams,
) -> Result<FamilyMember> {
    params.validate()?;
    if !(beta > 0.0 && beta_sharp > 0.0 && beta_star > beta_sharp) {
        return Err(Error::Input(
            "need 0 < beta, 0 < beta_sharp < beta_star".into(),
        ));
    }
    let ub = (beta_sharp + beta).min(beta_star);
    let k = -base.dv(beta_sharp);
    if !(k > SLOPE_TOL * slope_scale(base, ub)) {
        return Err(Error::Condition(format!(
            "V-infinity has slope {:e} at beta_sharp; not the crossing case",
            -k
        )));
    }
    let h = unit_box(params, 0.0, (2.0 * params.q_plus * beta_sharp).sqrt())?;
    let s = QuadSettings::default();
    let mut theta = 0.9;
    for _ in 0..60 {
        let bt = beta_sharp + theta * (ub - beta_sharp);
        theta *= 0.5;
        let vt = base.v(bt);
        if !(vt < 0.0) {
            continue;
        }
        let v0 = densities::v_ion_trapped(&h, params, bt, bt, &s);
        let lambda = -vt / v0;
        let g = h.scaled(lambda);
        let pot = base.with_trapped(g.clone(), bt, params)?;
        let chain = (1..=GRID)
            .all(|i| pot.dv(beta_sharp + (bt - beta_sharp) * i as f64 / GRID as f64) <= -0.25 * k);
        if !chain || !check_exists(pot.as_ref()).exists() {
            continue;
        }
        let mut m = FamilyMember::new(FamilyKind::InjectB, pot, *params, &g);
        m.lambda = Some(lambda);
        m.k = Some(k);
        return m.finish();
    }
    Err(Error::Numerical(
        "no admissible trapping energy found".into(),
    ))
}

/// Closed form of the two-edge box trapped potential (beta the base energy).
pub fn two_edge_v0(beta: f64, phi: f64) -> f64 {
    let p = |x: f64| if x > 0.0 { x * x.sqrt() } else { 0.0 };
    2.0 / 3.0 * (p(phi - 0.5 * beta) - p(phi - beta))
}

/// Trapped-ion injection when V-infinity touches zero tangentially at beta_sharp.
pub fn solitary_inject_case_c(
    base: &Untrapped,
    beta: f64,
    beta_sharp: f64,
    beta_star: f64,
    params: &PlasmaParams,
) -> Result<FamilyMember> {
    params.validate()?;
    if !(beta > 0.0 && beta_sharp >= beta && beta_star > beta_sharp) {
        return Err(Error::Input(
            "need 0 < beta <= beta_sharp < beta_star".into(),
        ));
    }
    let hi = beta_star.min(2.0 * beta_sharp);
    let d = base.dv(beta_sharp);
    if d.abs() > SLOPE_TOL * slope_scale(base, hi) {
        return Err(Error::Condition(format!(
            "V-infinity has slope {d:e} at beta_sharp; not the tangential case"
        )));
    }
    let at = |i: usize, a: f64, b: f64| a + (b - a) * i as f64 / GRID as f64;
    let argmin = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        (1..=GRID)
            .map(|i| at(i, a, b))
            .min_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap_or(b)
    };
    let v = |x: f64| base.v(x);
    let beta_one = argmin(&v, beta_sharp, hi);
    if !(base.v(beta_one) < 0.0) {
        return Err(Error::Condition(
            "V-infinity is not negative after beta_sharp".into(),
        ));
    }
    let w = |x: f64| base.v(x) / (x - beta_sharp);
    let coarse = argmin(&w, beta_sharp, beta_one);
    let cell = (beta_one - beta_sharp) / GRID as f64;
    let (mut a, mut b) = (
        (coarse - cell).max(beta_sharp + 1e-3 * cell),
        (coarse + cell).min(beta_one),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if w(x1) < w(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let bt = if w(0.5 * (a + b)) < w(coarse) {
        0.5 * (a + b)
    } else {
        coarse
    };
    let k = -w(bt);
    if !(k > 0.0) {
        return Err(Error::Numerical(
            "minimum of V-infinity/(Phi - beta_sharp) is not negative".into(),
        ));
    }
    let q2 = 2.0 * params.q_plus;
    let h = unit_box(
        params,
        (q2 * (bt - beta)).sqrt(),
        (q2 * (bt - 0.5 * beta)).sqrt(),
    )?;
    let v0 = densities::v_ion_trapped(&h, params, bt, bt, &QuadSettings::default());
    let lambda = -base.v(bt) / v0;
    let g = h.scaled(lambda);
    let pot = base.with_trapped(g.clone(), bt, params)?;
    let mut m = FamilyMember::new(FamilyKind::InjectC, pot, *params, &g);
    m.lambda = Some(lambda);
    m.k = Some(k);
    m.finish()
}

/// sqrt(Phi + tau) - sqrt(Phi).
pub fn f_tau(tau: f64, phi: f64) -> f64 {
    tau / ((phi + tau).sqrt() + phi.sqrt())
}

/// Box wave train without trapped ions: e+ rho+ = f_tau(Phi), e- rho- = f_tau(beta - Phi).
pub fn train_box_family(params: &PlasmaParams, beta: f64, tau: f64) -> Result<FamilyMember> {
    params.validate()?;
    if !(beta > 0.0 && tau > 0.0) {
        return Err(Error::Input("beta and tau must be positive".into()));
    }
    let (a, qp, qm) = (params.alpha, params.q_plus, params.q_minus);
    let r = (2.0 * qp * tau).sqrt();
    let hp = Marginal::piecewise(&[(a - r, a + r, 0.5 / (params.e_plus * (2.0 * qp).sqrt()))])?;
    let (lo, hi) = ((2.0 * qm * beta).sqrt(), (2.0 * qm * (beta + tau)).sqrt());
    let hm_h = 0.5 / (params.e_minus * (2.0 * qm).sqrt());
    let hm = Marginal::piecewise(&[(a - hi, a - lo, hm_h), (a + lo, a + hi, hm_h)])?;
    let pot = SagdeevPotential::train(
        *params,
        hp,
        hm,
        Marginal::zero(),
        beta,
        QuadSettings::default(),
    )?;
    let mut m = FamilyMember::new(
        FamilyKind::TrainBox,
        Arc::new(pot),
        *params,
        &Marginal::zero(),
    );
    m.tau = Some(tau);
    m.finish()
}

/// Scales every marginal of a train member so that its period becomes gamma_target.
pub fn rescale_to_period(member: &FamilyMember, gamma_target: f64) -> Result<FamilyMember> {
    if !(gamma_target > 0.0 && gamma_target.is_finite()) {
        return Err(Error::Input("target period must be positive".into()));
    }
    let sag = match (member.kind, member.sagdeev()) {
        (WaveKind::Train, Some(s)) => s,
        _ => {
            return Err(Error::Input(
                "rescaling applies to wave-train members with marginals".into(),
            ))
        }
    };
    let gamma = match member.period {
        Some(g) => g,
        None => period(member.potential.clone(), &ProfileSettings::default())?,
    };
    let c = (gamma / gamma_target).powi(2);
    let pot = sag.scaled(c);
    let trapped = pot.trapped.clone();
    let mut m = FamilyMember::new(member.family, Arc::new(pot), member.params, &trapped);
    m.scale = member.scale * c;
    m.tau = member.tau;
    m.a_tau_beta = member.a_tau_beta;
    m.finish()
}

/// tau* = beta* = 1/(10 kappa).
pub fn tau_star(kappa: f64) -> f64 {
    0.1 / kappa
}

/// (Phi + tau)^{3/2} - Phi^{3/2} - tau^{3/2}.
pub fn v_tilde_plus(tau: f64, phi: f64) -> f64 {
    vp_between(tau, 0.0, phi)
}

/// 1 - exp(-kappa Phi).
pub fn v_tilde_minus(kappa: f64, phi: f64) -> f64 {
    -(-kappa * phi).exp_m1()
}

fn vp_between(tau: f64, a: f64, b: f64) -> f64 {
    pow32_diff(b + tau, a + tau, b - a) - pow32_diff(b, a, b - a)
}

fn vm_between(kappa: f64, a: f64, b: f64) -> f64 {
    -(-kappa * a).exp() * (-kappa * (b - a)).exp_m1()
}

pub fn a_tau_beta(tau: f64, beta: f64, kappa: f64) -> f64 {
    v_tilde_minus(kappa, beta) / v_tilde_plus(tau, beta)
}

/// A V~+ - V~-, vanishing at 0 and beta.
pub fn v_tilde(tau: f64, beta: f64, kappa: f64, phi: f64) -> f64 {
    a_tau_beta(tau, beta, kappa) * v_tilde_plus(tau, phi) - v_tilde_minus(kappa, phi)
}

/// Half the dimensionless potential V~, so that (dPhi/dX)^2 = V~.
#[derive(Debug, Clone, Copy)]
pub struct BoltzmannTilde {
    pub tau: f64,
    pub beta: f64,
    pub kappa: f64,
    pub a: f64,
}

impl BoltzmannTilde {
    pub fn new(tau: f64, beta: f64, kappa: f64) -> Self {
        BoltzmannTilde {
            tau,
            beta,
            kappa,
            a: a_tau_beta(tau, beta, kappa),
        }
    }
}

impl Potential for BoltzmannTilde {
    fn kind(&self) -> WaveKind {
        WaveKind::Train
    }
    fn amplitude(&self) -> f64 {
        self.beta
    }
    fn v(&self, phi: f64) -> f64 {
        self.v_between(0.0, phi)
    }
    fn v_between(&self, a: f64, b: f64) -> f64 {
        0.5 * (self.a * vp_between(self.tau, a, b) - vm_between(self.kappa, a, b))
    }
    fn dv(&self, phi: f64) -> f64 {
        0.5 * (1.5 * self.a * f_tau(self.tau, phi) - self.kappa * (-self.kappa * phi).exp())
    }
}

/// gamma~ = 2 int_0^beta dPhi / sqrt(V~).
pub fn boltzmann_gamma_tilde(tau: f64, beta: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Input("kappa must be positive".into()));
    }
    let top = tau_star(kappa) * (1.0 + 1e-12);
    if !(tau > 0.0 && tau <= top && beta > 0.0 && beta <= top) {
        return Err(Error::Domain(format!(
            "(tau, beta) = ({tau}, {beta}) outside (0, {}]^2",
            tau_star(kappa)
        )));
    }
    period(
        Arc::new(BoltzmannTilde::new(tau, beta, kappa)),
        &ProfileSettings::default(),
    )
}

fn boltzmann_data(params: &PlasmaParams) -> Result<(f64, f64)> {
    match params.boltzmann {
        Some(b) => Ok((b.rho, b.kappa)),
        None => Err(Error::Input(
            "Boltzmann electrons (rho, kappa) required".into(),
        )),
    }
}

/// gamma = gamma~ sqrt(kappa / (2 e- rho)).
fn period_factor(params: &PlasmaParams) -> Result<f64> {
    let (rho, kappa) = boltzmann_data(params)?;
    Ok((kappa / (2.0 * params.e_minus * rho)).sqrt())
}

pub fn gamma_tilde_star(kappa: f64) -> Result<f64> {
    boltzmann_gamma_tilde(tau_star(kappa), tau_star(kappa), kappa)
}

/// Largest period reachable by the Boltzmann construction.
pub fn gamma_star(params: &PlasmaParams) -> Result<f64> {
    params.validate()?;
    let (_, kappa) = boltzmann_data(params)?;
    Ok(gamma_tilde_star(kappa)? * period_factor(params)?)
}

/// Wave train with a one-sided ion box and Maxwellian electrons.
pub fn boltzmann_member(params: &PlasmaParams, tau: f64, beta: f64) -> Result<FamilyMember> {
    params.validate()?;
    let (rho, kappa) = boltzmann_data(params)?;
    let a = a_tau_beta(tau, beta, kappa);
    let (qp, al) = (params.q_plus, params.alpha);
    let height = 3.0 * params.e_minus * rho * a / (2.0 * kappa * params.e_plus * (2.0 * qp).sqrt());
    let hp = Marginal::piecewise(&[(al, al + (2.0 * qp * tau).sqrt(), height)])?;
    let hm = Marginal::maxwellian(rho, al, kappa, params.q_minus)?;
    let pot = SagdeevPotential::train(
        *params,
        hp,
        hm,
        Marginal::zero(),
        beta,
        QuadSettings::default(),
    )?;
    let mut m = FamilyMember::new(
        FamilyKind::BoltzmannMatch,
        Arc::new(pot),
        *params,
        &Marginal::zero(),
    );
    m.tau = Some(tau);
    m.a_tau_beta = Some(a);
    m.finish()
}

/// `count` distinct wave trains with Boltzmann electrons and period gamma_target.
pub fn boltzmann_train_match(
    params: &PlasmaParams,
    gamma_target: f64,
    count: usize,
) -> Result<Vec<FamilyMember>> {
    params.validate()?;
    let (_, kappa) = boltzmann_data(params)?;
    if !(gamma_target > 0.0 && gamma_target.is_finite()) || count == 0 {
        return Err(Error::Input(
            "need a positive target period and count >= 1".into(),
        ));
    }
    let target = gamma_target / period_factor(params)?;
    let star = gamma_tilde_star(kappa)?;
    let ts = tau_star(kappa);
    let corner = (target - star).abs() <= 1e-12 * star;
    if target > star && !corner {
        return Err(Error::Condition(format!(
            "target period {gamma_target} is above the constructive range (gamma* = {})",
            star * period_factor(params)?
        )));
    }
    let delta = if corner {
        if count > 1 {
            return Err(Error::Condition(
                "at gamma* only the corner member exists".into(),
            ));
        }
        0.0
    } else {
        let mut d = 0.5 * ts;
        let mut found = false;
        for _ in 0..60 {
            if boltzmann_gamma_tilde(ts - d, ts, kappa)? > target {
                found = true;
                break;
            }
            d *= 0.5;
        }
        if !found {
            return Err(Error::Numerical(
                "no tau interval reaches the target period".into(),
            ));
        }
        d
    };
    (0..count)
        .into_par_iter()
        .map(|i| {
            let tau = ts - delta * i as f64 / count as f64;
            let beta = match_beta(tau, kappa, target, star)?;
            boltzmann_member(params, tau, beta)
        })
        .collect()
}

fn match_beta(tau: f64, kappa: f64, target: f64, star: f64) -> Result<f64> {
    let bs = tau_star(kappa);
    let f = |b: f64| boltzmann_gamma_tilde(tau, b, kappa).map(|g| g - target);
    let top = f(bs)?;
    if top.abs() <= 1e-12 * star {
        return Ok(bs);
    }
    if top < 0.0 {
        return Err(Error::Numerical(format!(
            "gamma~ at beta* is below the target for tau = {tau}"
        )));
    }
    let mut lo = 0.1 * bs;
    while f(lo)? >= 0.0 {
        lo *= 0.1;
        if lo < 1e-14 * bs {
            return Err(Error::Numerical(
                "no lower bracket for the period match".into(),
            ));
        }
    }
    let g = |b: f64| f(b).unwrap_or(f64::NAN);
    brent(g, lo, bs, 1e-15 * bs, 200)
}

/// Synthetic evaluator with a tangential (cubic) touch at 1: Phi^2 (1 - Phi)^3.
pub fn cubic_touch_evaluator() -> FnPotential {
    FnPotential::new(
        WaveKind::Solitary,
        1.0,
        |x| x * x * (1.0 - x).powi(3),
        |x| 2.0 * x * (1.0 - x).powi(3) - 3.0 * x * x * (1.0 - x).powi(2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn worked_untrapped() -> SagdeevPotential {
        let p = PlasmaParams::unit(0.0);
        let r = 2f64.sqrt();
        let h = 0.5 / r;
        let gp = Marginal::piecewise(&[(-2.0 * r, -r, h), (r, 2.0 * r, h)]).unwrap();
        let gm = Marginal::piecewise(&[(-1.9 * r, -r, h), (-0.1 * r, 0.1 * r, h), (r, 1.9 * r, h)])
            .unwrap();
        let probe =
            SagdeevPotential::solitary(p, gp, gm, Marginal::zero(), 1.0, QuadSettings::default())
                .unwrap();
        let beta_one = brent(|x| probe.v_inf(x), 0.3, 0.4, 1e-15, 200).unwrap();
        probe.with_trapped(Marginal::zero(), beta_one).unwrap()
    }

    fn injected() -> FamilyMember {
        let base = worked_untrapped();
        let b1 = base.amplitude;
        solitary_inject_case_b(
            &Untrapped::Marginals(base.clone()),
            b1,
            b1,
            f64::INFINITY,
            &base.params,
        )
        .unwrap()
    }

    #[test]
    fn cube_root_quantiles() {
        let p = PlasmaParams::unit(0.3);
        let top = (2.0f64).sqrt();
        let g = [Piece {
            lo: 0.3,
            hi: 0.3 + top,
            height: 0.7,
        }];
        let w = weight_pieces(&g, p.alpha, 0.3 + top);
        let total = 0.7 * top.powi(3) / 3.0;
        let a = weighted_quantile(&w, p.alpha, 0.25 * total);
        assert!((a - (0.3 + 0.25f64.cbrt() * top)).abs() < 1e-14);
        let b = weighted_quantile(&w, p.alpha, 0.5 * total);
        assert!((b - (0.3 + 0.5f64.cbrt() * top)).abs() < 1e-14);
        assert!(rel(0.7 * (a - 0.3).powi(3) / 3.0, 0.25 * total) < 1e-13);
    }

    #[test]
    fn perturbation_family() {
        let inj = injected();
        let base = inj.sagdeev().unwrap().clone();
        let beta = base.amplitude;
        let mut prev: Option<Marginal> = None;
        for tau in [0.05, 0.1, 0.2, 0.3, 0.45] {
            let m = solitary_perturb(&base, tau).unwrap();
            let s = m.sagdeev().unwrap();
            assert!((s.v0(beta) - base.v0(beta)).abs() < 1e-12);
            for i in 0..=200 {
                let phi = beta * i as f64 / 200.0;
                assert!(s.v(phi) >= base.v(phi) - 1e-14);
            }
            if let Some(q) = prev {
                assert!(q.l1_distance(&s.trapped) > 0.0);
            }
            prev = Some(s.trapped.clone());
        }
        let small = solitary_perturb(&base, 1e-9).unwrap();
        assert!(small.alpha_star.unwrap() < 1e-2);
        assert!(inj.lambda.unwrap() > 0.0);
        assert!(inj.potential.v(inj.beta).abs() < 1e-10);
        assert!(solitary_perturb(&base, 0.5).is_err());
        let empty = base.with_trapped(Marginal::zero(), beta).unwrap();
        assert!(matches!(
            solitary_perturb(&empty, 0.2),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn two_edge_box_closed_form() {
        let p = PlasmaParams {
            e_plus: 1.7,
            q_plus: 0.6,
            ..PlasmaParams::unit(0.2)
        };
        let (beta, bt) = (0.4, 1.1);
        let q2 = 2.0 * p.q_plus;
        let h = unit_box(
            &p,
            (q2 * (bt - beta)).sqrt(),
            (q2 * (bt - 0.5 * beta)).sqrt(),
        )
        .unwrap();
        let s = QuadSettings::default();
        for phi in [0.05, 0.2, 0.3, 0.4, 0.7, 1.1] {
            let v = densities::v_ion_trapped(&h, &p, bt, phi, &s);
            let p32 = |x: f64| x.max(0.0).powf(1.5);
            let direct = 2.0 / 3.0 * (p32(phi - 0.5 * beta) - p32(phi - beta));
            assert!((v - direct).abs() < 1e-12, "{phi}: {v} vs {direct}");
            assert!((two_edge_v0(beta, phi) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn injection_tangential_case() {
        let p = PlasmaParams::unit(0.0);
        let base = Untrapped::Evaluator(Arc::new(cubic_touch_evaluator()));
        let m = solitary_inject_case_c(&base, 1.0, 1.0, f64::INFINITY, &p).unwrap();
        assert!(m.lambda.unwrap() > 0.0);
        assert!(m.beta > 1.0);
        assert!(m.potential.v(m.beta).abs() < 1e-10);
        let wt: &dyn Potential = m.potential.as_ref();
        for i in 1..100 {
            let phi = 1.0 + (m.beta - 1.0) * i as f64 / 100.0;
            let h = 1e-4 * (m.beta - 1.0);
            let d2 = (two_edge_v0(1.0, phi + h) - 2.0 * two_edge_v0(1.0, phi)
                + two_edge_v0(1.0, phi - h))
                / (h * h);
            assert!(d2 < 0.0);
            assert!(wt.v(phi) > 0.0);
        }
        let crossing = Untrapped::Evaluator(Arc::new(FnPotential::new(
            WaveKind::Solitary,
            1.0,
            |x| x * x * (1.0 - x),
            |x| 2.0 * x - 3.0 * x * x,
        )));
        assert!(matches!(
            solitary_inject_case_c(&crossing, 1.0, 1.0, f64::INFINITY, &p),
            Err(Error::Condition(_))
        ));
        let m = solitary_inject_case_b(&crossing, 1.0, 1.0, f64::INFINITY, &p).unwrap();
        assert!(m.lambda.unwrap() > 0.0);
        assert!(m.potential.v(m.beta).abs() < 1e-10);
        assert!(matches!(
            solitary_inject_case_b(&base, 1.0, 1.0, f64::INFINITY, &p),
            Err(Error::Condition(_))
        ));
    }

    #[test]
    fn train_box_member() {
        let p = PlasmaParams {
            e_plus: 2.0,
            e_minus: 0.5,
            q_plus: 1.5,
            q_minus: 0.8,
            ..PlasmaParams::unit(0.4)
        };
        let (beta, tau) = (0.7, 0.3);
        let m = train_box_family(&p, beta, tau).unwrap();
        let s = m.sagdeev().unwrap();
        for i in 0..=50 {
            let phi = beta * i as f64 / 50.0;
            assert!((p.e_plus * s.rho_plus(phi) - f_tau(tau, phi)).abs() < 1e-12);
            assert!((p.e_minus * s.rho_minus(phi) - f_tau(tau, beta - phi)).abs() < 1e-12);
            let closed = (2.0 / 3.0)
                * (v_tilde_plus(tau, phi)
                    - (v_tilde_plus(tau, beta) - v_tilde_plus(tau, beta - phi)));
            assert!((s.v(phi) - closed).abs() < 1e-10, "{phi}");
        }
        assert!(s.v(beta).abs() < 1e-12);
        let mid = s.v(0.5 * beta);
        assert!((1..50).all(|i| s.v(beta * i as f64 / 50.0) <= mid + 1e-15));
        assert!(s.dv(0.49 * beta) > 0.0 && s.dv(0.51 * beta) < 0.0);

        let gamma = m.period.unwrap();
        let same = rescale_to_period(&m, gamma).unwrap();
        assert!((same.scale - 1.0).abs() < 1e-14);
        let half = rescale_to_period(&m, 0.5 * gamma).unwrap();
        assert!((half.scale - 4.0).abs() < 1e-12);
        assert!(rel(half.period.unwrap(), 0.5 * gamma) < 1e-8);
        assert!(rescale_to_period(&m, 0.0).is_err());
    }

    #[test]
    fn boltzmann_functionals() {
        assert!(rel(a_tau_beta(0.1, 0.1, 1.0), 3.6325525570040) < 1e-12);
        let golden = [
            (1e-2, 1.791311068141318),
            (1e-3, 0.985320328652747),
            (1e-4, 0.551786178218986),
        ];
        for (beta, g) in golden {
            assert!(
                rel(boltzmann_gamma_tilde(0.1, beta, 1.0).unwrap(), g) < 1e-9,
                "{beta}"
            );
        }
        assert!(rel(gamma_tilde_star(1.0).unwrap(), 3.689571773739116) < 1e-9);
        assert!(
            boltzmann_gamma_tilde(0.05, 0.1, 1.0).unwrap()
                < boltzmann_gamma_tilde(0.1, 0.1, 1.0).unwrap()
        );
        assert!(matches!(
            boltzmann_gamma_tilde(0.2, 0.1, 1.0),
            Err(Error::Domain(_))
        ));
        for (tau, beta) in [(0.1, 0.1), (0.01, 0.07), (0.05, 1e-4)] {
            let v = |x: f64| v_tilde(tau, beta, 1.0, x);
            assert!(v(beta).abs() < 1e-15);
            assert!((1..100).all(|i| v(beta * i as f64 / 100.0) > 0.0));
        }
    }

    #[test]
    fn boltzmann_matching() {
        let mut p = PlasmaParams::unit(0.0);
        p.boltzmann = Some(crate::model::Boltzmann {
            rho: 1.0,
            kappa: 1.0,
        });
        let gs = gamma_star(&p).unwrap();
        let ms = boltzmann_train_match(&p, 0.5 * gs, 3).unwrap();
        assert_eq!(ms.len(), 3);
        for m in &ms {
            assert!(rel(m.period.unwrap(), 0.5 * gs) < 1e-6);
        }
        assert!(ms[0].tau != ms[1].tau && ms[1].tau != ms[2].tau);
        let corner = boltzmann_train_match(&p, gs, 1).unwrap();
        assert!(rel(corner[0].beta, 0.1) < 1e-12 && rel(corner[0].tau.unwrap(), 0.1) < 1e-12);
        assert!(matches!(
            boltzmann_train_match(&p, 1.01 * gs, 1),
            Err(Error::Condition(_))
        ));
        assert!(boltzmann_train_match(&PlasmaParams::unit(0.0), 1.0, 1).is_err());
    }
}
