use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controls::GridControls;
use crate::error::{Error, Result};
use crate::model::{CoherentState, PhysicalParams, SquareBarrier, System};
use crate::propagator::PostSelection;

/// One experiment, as read from a JSON file. Units are atomic units unless
/// `params` says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub params: PhysicalParams,
    pub state: CoherentState,
    pub barrier: SquareBarrier,
    /// Post-selected point.
    pub x: f64,
    #[serde(default)]
    pub grid: GridControls,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Width parameters for `sweep`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<f64>,
}

impl ExperimentConfig {
    /// Mass 1/2, unit barrier of width 2, `p_i = 1/4`, `Γ = 0.001`, `x = −x_i = 100`.
    pub fn reference() -> Self {
        Self {
            name: "reference".into(),
            params: PhysicalParams::default(),
            state: CoherentState::reference(),
            barrier: SquareBarrier::reference(),
            x: 100.0,
            grid: GridControls::default(),
            output_dir: None,
            gammas: vec![0.001, 0.00025],
        }
    }

    pub fn system(&self) -> System {
        System { params: self.params, state: self.state, barrier: self.barrier }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { state: self.state.with_gamma(gamma), ..self.clone() }
    }

    pub fn with_system(&self, system: System) -> Self {
        Self { params: system.params, state: system.state, barrier: system.barrier, ..self.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![format!("malformed config: {e}")]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(vec![format!("cannot read config {}: {e}", path.display())])
        })?;
        Self::from_json(&text)
    }

    /// Single-line JSON; parses back to an identical config.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Collects every violated invariant into one report.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name must not be empty".into());
        }
        if self.name.contains(['/', '\\']) {
            errs.push(format!("name must not contain path separators: {:?}", self.name));
        }
        for r in [self.system().validate(), self.grid.validate()] {
            if let Err(e) = r {
                errs.extend(e);
            }
        }
        for g in &self.gammas {
            if !(*g > 0.0 && g.is_finite()) {
                errs.push(format!("sweep gamma must be positive, got {g}"));
            }
        }
        if errs.is_empty() {
            if let Err(Error::Domain(e)) = PostSelection::new(self.x, &self.system(), self.grid.margin)
            {
                errs.push(e);
            }
            for dx in [-0.5 * self.grid.delta_x, 0.5 * self.grid.delta_x] {
                if PostSelection::new(self.x + dx, &self.system(), self.grid.margin).is_err() {
                    errs.push(format!(
                        "x +- delta_x/2 = {} enters the barrier margin",
                        self.x + dx
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }
}
