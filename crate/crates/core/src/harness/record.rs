use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::config::ExperimentConfig;
use crate::steepest::{self, SdConfig};
use crate::tptd::{ArrivalMomentum, TimeGrid};
use crate::weak::{Analysis, MomentSummary};

/// A scalar together with its value at doubled resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub value: f64,
    pub doubled_value: f64,
    pub relative_drift: f64,
}

impl Scalar {
    pub fn new(value: f64, doubled_value: f64) -> Self {
        let scale = value.abs().max(f64::MIN_POSITIVE);
        Self { value, doubled_value, relative_drift: (doubled_value - value).abs() / scale }
    }
}

/// Steepest-descent predictions for the same configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdValues {
    pub normalization: f64,
    pub mean_p: f64,
    pub std_p: f64,
    pub mean_h: f64,
    pub var_h: f64,
    pub var_t: f64,
    pub uncertainty_product: f64,
    pub arrival_momentum: f64,
}

impl SdValues {
    pub fn compute(cfg: &SdConfig, grid: &TimeGrid) -> crate::Result<Self> {
        let s = &cfg.state;
        Ok(Self {
            normalization: steepest::sd_norm(cfg)?,
            mean_p: steepest::sd_mean_momentum(cfg),
            std_p: (0.5 * cfg.params.hbar * cfg.params.hbar * s.gamma).sqrt(),
            mean_h: steepest::sd_energy_mean(cfg),
            var_h: steepest::sd_energy_variance(cfg),
            var_t: steepest::sd_time_variance(cfg),
            uncertainty_product: steepest::sd_uncertainty_product(cfg),
            arrival_momentum: 1.0 / steepest::sd_inverse_momentum(cfg, grid),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t_max: f64,
    pub time_samples: usize,
    pub time_spacing: f64,
    pub momentum_panels: usize,
    pub momentum_nodes: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub tail_mass: f64,
    pub tail_slope: f64,
    pub masked_mass: f64,
    pub reflected_overlap_ratio: f64,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn of(analysis: &Analysis, notes: Vec<String>) -> Self {
        let scan = &analysis.scan;
        let mut all = scan.momentum.diagnostics.clone();
        all.extend(notes);
        Self {
            t_max: scan.grid.t_max,
            time_samples: scan.grid.samples,
            time_spacing: scan.grid.spacing,
            momentum_panels: scan.momentum.panel_count(),
            momentum_nodes: scan.momentum.len(),
            p_lo: scan.momentum.p_lo,
            p_hi: scan.momentum.p_hi,
            tail_mass: analysis.distribution.tail_mass_estimate,
            tail_slope: analysis.distribution.tail_slope,
            masked_mass: analysis.summary.masked_mass,
            reflected_overlap_ratio: scan.reflected_overlap_ratio,
            notes: all,
        }
    }
}

/// Everything `table` reports for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub normalization: f64,
    pub summary: MomentSummary,
    pub arrival: ArrivalMomentum,
    pub steepest_descent: SdValues,
    /// Headline scalars with their doubled-resolution counterparts.
    pub resolution: BTreeMap<String, Scalar>,
    pub diagnostics: Diagnostics,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl ResultRecord {
    pub fn max_drift(&self) -> (String, f64) {
        self.resolution
            .iter()
            .map(|(k, s)| (k.clone(), s.relative_drift))
            .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }
}
