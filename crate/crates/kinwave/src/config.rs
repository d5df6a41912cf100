//! JSON run configuration (schema 1).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "kind": "solitary",
//!   "params": {"e_plus": 1, "e_minus": 1, "q_plus": 1, "q_minus": 1, "alpha": 0},
//!   "amplitude": 0.3963620466890920,
//!   "plus": {"kind": "piecewise", "pieces": [[-2.8284, -1.4142, 0.3536], [1.4142, 2.8284, 0.3536]]},
//!   "minus": {"kind": "piecewise", "pieces": [[-2.6870, -1.4142, 0.3536], [-0.1414, 0.1414, 0.3536], [1.4142, 2.6870, 0.3536]]},
//!   "trapped": {"kind": "piecewise", "pieces": []}
//! }
//! ```
//!
//! `plus`/`minus` are F+inf/F-inf for solitary waves, F+l/F-r for shocks and H+/H- for
//! trains; `amplitude` is beta or Phi_l. Optional blocks: `quad`, `profile`, `output`, `family`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Marginal, MarginalSpec, PlasmaParams};
use crate::profile::ProfileSettings;
use crate::quad::QuadSettings;
use crate::sagdeev::{SagdeevPotential, WaveKind};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// X samples in the phase-space CSVs.
    pub nx: usize,
    /// xi1 samples in the phase-space CSVs (breakpoint images are added).
    pub nxi: usize,
    pub seed: u64,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            nx: 101,
            nxi: 201,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySettings {
    /// Perturbation and train-box parameters.
    pub taus: Vec<f64>,
    /// Target period for train-box rescaling and the Boltzmann match.
    pub gamma: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub kind: WaveKind,
    pub params: PlasmaParams,
    pub amplitude: f64,
    pub plus: MarginalSpec,
    pub minus: MarginalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trapped: Option<MarginalSpec>,
    #[serde(default)]
    pub quad: QuadSettings,
    #[serde(default)]
    pub profile: ProfileSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub family: FamilySettings,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Config::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Input(format!(
                "unsupported schema {} (expected {SCHEMA})",
                self.schema
            )));
        }
        self.params.validate()?;
        self.quad.validate()?;
        self.profile.validate()?;
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Input("amplitude must be positive and finite".into()));
        }
        if self.output.nx < 2 || self.output.nxi < 2 {
            return Err(Error::Input(
                "output.nx and output.nxi must be at least 2".into(),
            ));
        }
        if self.kind == WaveKind::Shock && self.trapped.as_ref().is_some_and(|t| !is_empty(t)) {
            return Err(Error::Input("shocks carry no trapped ions".into()));
        }
        Ok(())
    }

    pub fn marginals(&self) -> Result<(Marginal, Marginal, Marginal)> {
        let p = &self.params;
        let gp = Marginal::from_spec(&self.plus, p.q_plus)?;
        let gm = Marginal::from_spec(&self.minus, p.q_minus)?;
        let g = match &self.trapped {
            Some(t) => Marginal::from_spec(t, p.q_plus)?,
            None => Marginal::zero(),
        };
        Ok((gp, gm, g))
    }

    pub fn potential(&self) -> Result<SagdeevPotential> {
        let (gp, gm, g) = self.marginals()?;
        let (p, a, s) = (self.params, self.amplitude, self.quad);
        match self.kind {
            WaveKind::Solitary => SagdeevPotential::solitary(p, gp, gm, g, a, s),
            WaveKind::Train => SagdeevPotential::train(p, gp, gm, g, a, s),
            WaveKind::Shock => SagdeevPotential::shock(p, gp, gm, a, s),
        }
    }

    /// Config describing an existing potential.
    pub fn from_potential(pot: &SagdeevPotential) -> Config {
        Config {
            schema: SCHEMA,
            kind: pot.kind,
            params: pot.params,
            amplitude: pot.amplitude,
            plus: pot.g_plus.to_spec(),
            minus: pot.g_minus.to_spec(),
            trapped: (!pot.trapped.is_zero()).then(|| pot.trapped.to_spec()),
            quad: pot.settings,
            profile: ProfileSettings::default(),
            output: OutputSettings::default(),
            family: FamilySettings::default(),
        }
    }
}

fn is_empty(spec: &MarginalSpec) -> bool {
    matches!(spec, MarginalSpec::Piecewise { pieces } if pieces.is_empty())
}
