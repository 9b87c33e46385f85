use serde::{Deserialize, Serialize};

/// Numerical resolution knobs shared by the propagator and the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridControls {
    /// Momentum window half-width in units of `σ_p = ħ√(Γ/2)`.
    pub window: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub time_samples: usize,
    /// Upper bound on the normalized mass in the last tenth of the time grid.
    pub eps_tail: f64,
    /// Point separation for the arrival-time momentum protocol.
    pub delta_x: f64,
    /// Required clearance between the post-selected point and the barrier edge.
    pub margin: f64,
    /// Lower momentum cutoff as a fraction of `p_i`.
    pub p_floor_fraction: f64,
    /// Weak values are masked where `|ψ|` falls below this fraction of its peak.
    pub mask_floor: f64,
}

impl Default for GridControls {
    fn default() -> Self {
        Self {
            window: 12.0,
            panels: 40,
            nodes_per_panel: 50,
            time_samples: 8192,
            eps_tail: 1e-6,
            delta_x: 0.5,
            margin: 1.0,
            p_floor_fraction: 1e-6,
            mask_floor: 1e-14,
        }
    }
}

impl GridControls {
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.window >= 6.0 && self.window.is_finite()) {
            errs.push(format!("momentum window must be >= 6, got {}", self.window));
        }
        if self.panels == 0 {
            errs.push("panels must be >= 1".into());
        }
        if self.nodes_per_panel < 2 {
            errs.push("nodes_per_panel must be >= 2".into());
        }
        if self.time_samples < 2 {
            errs.push("time_samples must be >= 2".into());
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            errs.push(format!("eps_tail must lie in (0, 1), got {}", self.eps_tail));
        }
        if !(self.delta_x > 0.0 && self.delta_x.is_finite()) {
            errs.push(format!("delta_x must be positive, got {}", self.delta_x));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            errs.push(format!("margin must be non-negative, got {}", self.margin));
        }
        if !(self.p_floor_fraction > 0.0 && self.p_floor_fraction < 1.0) {
            errs.push(format!("p_floor_fraction must lie in (0, 1), got {}", self.p_floor_fraction));
        }
        if !(self.mask_floor >= 0.0 && self.mask_floor < 1.0) {
            errs.push(format!("mask_floor must lie in [0, 1), got {}", self.mask_floor));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Twice the momentum panels and `2n − 1` time samples (halved spacing).
    pub fn doubled(&self) -> Self {
        Self { panels: 2 * self.panels, time_samples: 2 * self.time_samples - 1, ..*self }
    }
}
