//! Sagdeev potentials for solitary waves, shocks and wave trains.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::densities::{self, dens_shift};
use crate::error::{domain, Error, Result};
use crate::model::{validate_trapped, Marginal, PlasmaParams};
use crate::quad::QuadSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Solitary,
    Shock,
    Train,
}

impl fmt::Display for WaveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveKind::Solitary => "solitary",
            WaveKind::Shock => "shock",
            WaveKind::Train => "train",
        })
    }
}

/// Anything that behaves like a Sagdeev potential on [0, amplitude].
pub trait Potential: Send + Sync {
    fn kind(&self) -> WaveKind;
    fn amplitude(&self) -> f64;
    fn v(&self, phi: f64) -> f64;
    fn dv(&self, phi: f64) -> f64;
    /// V(b) - V(a); implementors override with forms that avoid cancellation.
    fn v_between(&self, a: f64, b: f64) -> f64 {
        self.v(b) - self.v(a)
    }
    /// Interior points where dv is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Electron marginal whose symmetry about alpha is required, with the parameters.
    fn symmetry_marginal(&self) -> Option<(&Marginal, &PlasmaParams)> {
        None
    }
    fn as_sagdeev(&self) -> Option<&SagdeevPotential> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct SagdeevPotential {
    pub kind: WaveKind,
    pub params: PlasmaParams,
    /// beta for solitary waves and trains, Phi_l for shocks.
    pub amplitude: f64,
    /// F+inf, F+l or H+.
    pub g_plus: Marginal,
    /// F-inf, F-r or H-.
    pub g_minus: Marginal,
    /// Trapped ions G; zero for shocks.
    pub trapped: Marginal,
    pub settings: QuadSettings,
}

impl SagdeevPotential {
    pub fn solitary(
        params: PlasmaParams,
        f_plus_inf: Marginal,
        f_minus_inf: Marginal,
        g: Marginal,
        beta: f64,
        settings: QuadSettings,
    ) -> Result<Self> {
        Self::closed(
            WaveKind::Solitary,
            params,
            f_plus_inf,
            f_minus_inf,
            g,
            beta,
            settings,
        )
    }

    pub fn train(
        params: PlasmaParams,
        h_plus: Marginal,
        h_minus: Marginal,
        g: Marginal,
        beta: f64,
        settings: QuadSettings,
    ) -> Result<Self> {
        Self::closed(WaveKind::Train, params, h_plus, h_minus, g, beta, settings)
    }

    fn closed(
        kind: WaveKind,
        params: PlasmaParams,
        g_plus: Marginal,
        g_minus: Marginal,
        g: Marginal,
        beta: f64,
        settings: QuadSettings,
    ) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Input("beta must be positive and finite".into()));
        }
        validate_trapped(&g, params.alpha)?;
        Ok(SagdeevPotential {
            kind,
            params,
            amplitude: beta,
            g_plus,
            g_minus,
            trapped: g,
            settings,
        })
    }

    pub fn shock(
        params: PlasmaParams,
        f_plus_l: Marginal,
        f_minus_r: Marginal,
        phi_l: f64,
        settings: QuadSettings,
    ) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        if !(phi_l > 0.0 && phi_l.is_finite()) {
            return Err(Error::Input("Phi_l must be positive and finite".into()));
        }
        Ok(SagdeevPotential {
            kind: WaveKind::Shock,
            params,
            amplitude: phi_l,
            g_plus: f_plus_l,
            g_minus: f_minus_r,
            trapped: Marginal::zero(),
            settings,
        })
    }

    /// Same potential with every marginal multiplied by c (V scales by c).
    pub fn scaled(&self, c: f64) -> Self {
        SagdeevPotential {
            g_plus: self.g_plus.scaled(c),
            g_minus: self.g_minus.scaled(c),
            trapped: self.trapped.scaled(c),
            ..self.clone()
        }
    }

    /// Same untrapped data with a new trapped marginal and trapping energy.
    pub fn with_trapped(&self, g: Marginal, beta: f64) -> Result<Self> {
        if self.kind == WaveKind::Shock {
            return domain("shocks carry no trapped ions");
        }
        Self::closed(
            self.kind,
            self.params,
            self.g_plus.clone(),
            self.g_minus.clone(),
            g,
            beta,
            self.settings,
        )
    }

    /// Potential without trapped ions (defined for all Phi >= 0 unless a shock).
    pub fn v_inf(&self, phi: f64) -> f64 {
        let s = &self.settings;
        match self.kind {
            WaveKind::Shock => {
                densities::v_ion_shock_between(
                    &self.g_plus,
                    &self.params,
                    self.amplitude,
                    0.0,
                    phi,
                    s,
                ) - densities::v_electron(&self.g_minus, &self.params, phi, s)
            }
            _ => {
                densities::v_ion_inf(&self.g_plus, &self.params, phi, s)
                    - densities::v_electron(&self.g_minus, &self.params, phi, s)
            }
        }
    }

    pub fn dv_inf(&self, phi: f64) -> f64 {
        self.params.e_plus * self.rho_plus_untrapped(phi)
            - self.params.e_minus * self.rho_minus(phi)
    }

    pub fn v0(&self, phi: f64) -> f64 {
        if self.trapped.is_zero() || self.kind == WaveKind::Shock {
            return 0.0;
        }
        densities::v_ion_trapped(
            &self.trapped,
            &self.params,
            self.amplitude,
            phi.min(self.amplitude),
            &self.settings,
        )
    }

    fn rho_plus_untrapped(&self, phi: f64) -> f64 {
        let p = &self.params;
        let c = match self.kind {
            WaveKind::Shock => 2.0 * p.q_plus * (self.amplitude - phi),
            _ => -2.0 * p.q_plus * phi,
        };
        dens_shift(
            &self.g_plus,
            p.alpha,
            c,
            f64::NEG_INFINITY,
            f64::INFINITY,
            &self.settings,
        )
    }

    fn rho_plus_trapped(&self, phi: f64) -> f64 {
        if self.trapped.is_zero() || self.kind == WaveKind::Shock {
            return 0.0;
        }
        let p = &self.params;
        let c_hi = 2.0 * p.q_plus * self.amplitude;
        let c = 2.0 * p.q_plus * (self.amplitude - phi.min(self.amplitude));
        2.0 * dens_shift(&self.trapped, p.alpha, c, 0.0, c_hi.sqrt(), &self.settings)
    }

    pub fn rho_plus(&self, phi: f64) -> f64 {
        self.rho_plus_untrapped(phi) + self.rho_plus_trapped(phi)
    }

    pub fn rho_minus(&self, phi: f64) -> f64 {
        densities::rho_minus(&self.g_minus, &self.params, phi.max(0.0), &self.settings)
            .unwrap_or(f64::NAN)
    }

    fn check(&self, phi: f64) -> Result<()> {
        if !(phi >= 0.0 && phi <= self.amplitude) {
            return domain(format!("Phi = {phi} is outside [0, {}]", self.amplitude));
        }
        Ok(())
    }
}

impl Potential for SagdeevPotential {
    fn kind(&self) -> WaveKind {
        self.kind
    }

    fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn v(&self, phi: f64) -> f64 {
        self.v_inf(phi) + self.v0(phi)
    }

    fn dv(&self, phi: f64) -> f64 {
        self.params.e_plus * self.rho_plus(phi) - self.params.e_minus * self.rho_minus(phi)
    }

    fn v_between(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return -self.v_between(b, a);
        }
        let (p, s) = (&self.params, &self.settings);
        let electrons = densities::v_electron_between(&self.g_minus, p, a, b, s);
        match self.kind {
            WaveKind::Shock => {
                densities::v_ion_shock_between(&self.g_plus, p, self.amplitude, a, b, s) - electrons
            }
            _ => {
                let trapped = if self.trapped.is_zero() {
                    0.0
                } else {
                    let beta = self.amplitude;
                    densities::v_ion_trapped_between(
                        &self.trapped,
                        p,
                        beta,
                        a.min(beta),
                        b.min(beta),
                        s,
                    )
                };
                densities::v_ion_inf_between(&self.g_plus, p, a, b, s) - electrons + trapped
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let p = &self.params;
        let amp = self.amplitude;
        let mut k: Vec<f64> = Vec::new();
        let u2 = |g: &Marginal| -> Vec<f64> {
            if matches!(g, Marginal::Maxwellian { .. }) {
                return Vec::new();
            }
            g.breakpoints()
                .iter()
                .map(|b| (b - p.alpha) * (b - p.alpha))
                .collect()
        };
        k.extend(u2(&self.g_minus).into_iter().map(|w| w / (2.0 * p.q_minus)));
        match self.kind {
            WaveKind::Shock => k.extend(
                u2(&self.g_plus)
                    .into_iter()
                    .map(|w| amp - w / (2.0 * p.q_plus)),
            ),
            _ => k.extend(
                u2(&self.trapped)
                    .into_iter()
                    .map(|w| amp - w / (2.0 * p.q_plus)),
            ),
        }
        k.retain(|x| *x > 0.0 && *x < amp);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    fn symmetry_marginal(&self) -> Option<(&Marginal, &PlasmaParams)> {
        match self.kind {
            WaveKind::Shock => None,
            _ => Some((&self.g_minus, &self.params)),
        }
    }

    fn as_sagdeev(&self) -> Option<&SagdeevPotential> {
        Some(self)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential given by closures; used for synthetic cases and for
/// untrapped parts known only as evaluators.
#[derive(Clone)]
pub struct FnPotential {
    pub kind: WaveKind,
    pub amplitude: f64,
    v: ScalarFn,
    dv: ScalarFn,
    kinks: Vec<f64>,
}

impl FnPotential {
    pub fn new(
        kind: WaveKind,
        amplitude: f64,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnPotential {
            kind,
            amplitude,
            v: Arc::new(v),
            dv: Arc::new(dv),
            kinks: Vec::new(),
        }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl fmt::Debug for FnPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential")
            .field("kind", &self.kind)
            .field("amplitude", &self.amplitude)
            .finish()
    }
}

impl Potential for FnPotential {
    fn kind(&self) -> WaveKind {
        self.kind
    }
    fn amplitude(&self) -> f64 {
        self.amplitude
    }
    fn v(&self, phi: f64) -> f64 {
        (self.v)(phi)
    }
    fn dv(&self, phi: f64) -> f64 {
        (self.dv)(phi)
    }
    fn kinks(&self) -> Vec<f64> {
        self.kinks
            .iter()
            .cloned()
            .filter(|k| *k > 0.0 && *k < self.amplitude)
            .collect()
    }
}

/// An untrapped potential given as an evaluator plus trapped ions G at energy beta.
#[derive(Clone)]
pub struct WithTrapped {
    pub base: Arc<dyn Potential>,
    pub trapped: Marginal,
    pub beta: f64,
    pub params: PlasmaParams,
    pub settings: QuadSettings,
}

impl Potential for WithTrapped {
    fn kind(&self) -> WaveKind {
        WaveKind::Solitary
    }
    fn amplitude(&self) -> f64 {
        self.beta
    }
    fn v(&self, phi: f64) -> f64 {
        self.base.v(phi)
            + densities::v_ion_trapped(&self.trapped, &self.params, self.beta, phi, &self.settings)
    }
    fn v_between(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        let t = densities::v_ion_trapped_between(
            &self.trapped,
            &self.params,
            self.beta,
            lo,
            hi,
            &self.settings,
        );
        self.base.v_between(a, b) + if a <= b { t } else { -t }
    }
    fn dv(&self, phi: f64) -> f64 {
        let p = &self.params;
        let c_hi = 2.0 * p.q_plus * self.beta;
        let c = 2.0 * p.q_plus * (self.beta - phi);
        self.base.dv(phi)
            + 2.0
                * p.e_plus
                * dens_shift(&self.trapped, p.alpha, c, 0.0, c_hi.sqrt(), &self.settings)
    }
    fn kinks(&self) -> Vec<f64> {
        let p = &self.params;
        let mut k = self.base.kinks();
        k.extend(
            self.trapped
                .breakpoints()
                .iter()
                .map(|b| self.beta - (b - p.alpha) * (b - p.alpha) / (2.0 * p.q_plus)),
        );
        k.retain(|x| *x > 0.0 && *x < self.beta);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

/// V-infinity for a solitary wave or train.
pub fn v_infinity(
    g_plus: &Marginal,
    g_minus: &Marginal,
    params: &PlasmaParams,
    phi: f64,
    s: &QuadSettings,
) -> Result<f64> {
    if !(phi >= 0.0) {
        return domain(format!("Phi = {phi} is negative"));
    }
    Ok(densities::v_ion_inf(g_plus, params, phi, s)
        - densities::v_electron(g_minus, params, phi, s))
}

/// Trapped-ion part of the potential.
pub fn v_trapped(
    g: &Marginal,
    params: &PlasmaParams,
    beta: f64,
    phi: f64,
    s: &QuadSettings,
) -> Result<f64> {
    if !(beta > 0.0) || !(0.0..=beta).contains(&phi) {
        return domain(format!("Phi = {phi} is outside [0, {beta}]"));
    }
    Ok(densities::v_ion_trapped(g, params, beta, phi, s))
}

pub fn v_total(pot: &SagdeevPotential, phi: f64) -> Result<f64> {
    pot.check(phi)?;
    Ok(pot.v(phi))
}

pub fn dv(pot: &SagdeevPotential, phi: f64) -> Result<f64> {
    pot.check(phi)?;
    Ok(Potential::dv(pot, phi))
}

/// Max relative mismatch between central differences of v and dv on an n-point interior grid,
/// relative to max |dv| on the grid.
pub fn derivative_mismatch(pot: &dyn Potential, n: usize) -> f64 {
    let amp = pot.amplitude();
    let h = 1e-6 * amp;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..=n {
        let phi = amp * i as f64 / (n + 1) as f64;
        let fd = (pot.v(phi + h) - pot.v(phi - h)) / (2.0 * h);
        let d = pot.dv(phi);
        scale = scale.max(d.abs());
        worst = worst.max((fd - d).abs());
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}
