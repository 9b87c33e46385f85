//! Steepest-descent (saddle-point) closed forms for the transmitted packet.
//!
//! These evaluate analytic expressions only; the single exception is the
//! inverse arrival-time momentum, a one-dimensional time integral over the
//! Gaussian distribution on the caller's time grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Amplitude, CoherentState, PhysicalParams, SquareBarrier, System};
use crate::tptd::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdConfig {
    pub state: CoherentState,
    pub barrier: SquareBarrier,
    pub params: PhysicalParams,
    pub x: f64,
}

impl SdConfig {
    pub fn new(system: &System, x: f64) -> Self {
        Self { state: system.state, barrier: system.barrier, params: system.params, x }
    }

    fn parts(&self) -> (f64, f64, f64, f64, f64, f64) {
        let s = &self.state;
        (self.params.hbar, self.params.mass, s.gamma, s.x_center, s.p_incident, self.x)
    }

    /// Saddle-point momentum `(M p_i − iħΓM(x_i − x))/(M + itħΓ)`.
    pub fn saddle_momentum(&self, t: f64) -> Amplitude {
        let (hbar, m, g, xi, pi, x) = self.parts();
        Amplitude::new(m * pi, -hbar * g * m * (xi - x)) / Amplitude::new(m, t * hbar * g)
    }
}

/// Leading contribution to `⟨x|Ψ(t)⟩` for `x ≫ a`.
pub fn sd_wavefunction(cfg: &SdConfig, t: f64) -> Result<Amplitude> {
    let (hbar, m, g, xi, pi, x) = cfg.parts();
    let denom = Amplitude::new(m, t * hbar * g);
    let prefactor = (g * m * m / (PI * denom * denom)).powf(0.25);
    let t_amp = cfg.barrier.transmission(&cfg.params, cfg.saddle_momentum(t))?;
    let inner = Amplitude::new(-pi / (hbar * g), xi - x);
    let exponent = -pi * pi / (2.0 * hbar * hbar * g) + 0.5 * m * g * inner * inner / denom;
    Ok(prefactor * t_amp * exponent.exp() * Amplitude::from_polar(1.0, cfg.state.global_phase))
}

/// `|⟨x|Ψ(t)⟩|²` in its printed real form.
pub fn sd_density(cfg: &SdConfig, t: f64) -> Result<f64> {
    let (hbar, m, g, xi, pi, x) = cfg.parts();
    let spread = 1.0 + (t * hbar * g / m).powi(2);
    let arg = Amplitude::new(pi, -hbar * g * (xi - x)) / Amplitude::new(1.0, t * hbar * g / m);
    let t2 = cfg.barrier.transmission(&cfg.params, arg)?.norm_sqr();
    let lead = m * g.sqrt() / (PI * (m * m + t * t * hbar * hbar * g * g)).sqrt();
    let shift = xi - x + pi * t / m;
    Ok(lead * t2 * (-g * shift * shift / spread).exp())
}

/// `N(x) ≃ M|T(p_i)|²/p_i`, independent of `x`.
pub fn sd_norm(cfg: &SdConfig) -> Result<f64> {
    let (_, m, _, _, pi, _) = cfg.parts();
    let t = cfg.barrier.transmission(&cfg.params, Amplitude::new(pi, 0.0))?;
    Ok(m * t.norm_sqr() / pi)
}

pub fn sd_weak_momentum(cfg: &SdConfig, t: f64) -> Amplitude {
    let (hbar, m, g, xi, pi, x) = cfg.parts();
    let denom = m * m + (t * hbar * g).powi(2);
    let re = m * (m * pi - hbar * hbar * g * g * (xi - x) * t) / denom;
    let im = hbar * g * m * (m * (x - xi) - pi * t) / denom;
    Amplitude::new(re, im)
}

/// Gaussian transition path time distribution `P_SD(t;x)`.
pub fn sd_distribution(cfg: &SdConfig, t: f64) -> f64 {
    let (hbar, m, g, xi, pi, x) = cfg.parts();
    let spread = 1.0 + (t * hbar * g / m).powi(2);
    let shift = xi - x + pi * t / m;
    g.sqrt() * pi / (PI * (m * m + t * t * hbar * hbar * g * g)).sqrt()
        * (-g * shift * shift / spread).exp()
}

/// `⟨Δt²⟩ ≃ (1/2Γ)(M/p_i)²`.
pub fn sd_time_variance(cfg: &SdConfig) -> f64 {
    let (_, m, g, _, pi, _) = cfg.parts();
    (m / pi).powi(2) / (2.0 * g)
}

/// `⟨H⟩ ≃ p_i²/2M + ħ²Γ/4M`.
pub fn sd_energy_mean(cfg: &SdConfig) -> f64 {
    let (hbar, m, g, _, pi, _) = cfg.parts();
    pi * pi / (2.0 * m) + hbar * hbar * g / (4.0 * m)
}

/// Leading `ħ²Γp_i²/2M²` and correction `ħ⁴Γ²/8M²` of the energy variance.
pub fn sd_energy_variance_terms(cfg: &SdConfig) -> (f64, f64) {
    let (hbar, m, g, _, pi, _) = cfg.parts();
    let h2 = hbar * hbar;
    (h2 * g * pi * pi / (2.0 * m * m), h2 * h2 * g * g / (8.0 * m * m))
}

pub fn sd_energy_variance(cfg: &SdConfig) -> f64 {
    let (lead, corr) = sd_energy_variance_terms(cfg);
    lead + corr
}

/// `⟨Δt²⟩⟨ΔHΔH*⟩ ≃ ħ²/4 + ħ⁴Γ/16p_i²`.
pub fn sd_uncertainty_product(cfg: &SdConfig) -> f64 {
    let (hbar, _, g, _, pi, _) = cfg.parts();
    let h2 = hbar * hbar;
    h2 / 4.0 + h2 * h2 * g / (16.0 * pi * pi)
}

/// `⟨p(x)⟩ ≃ p_i`.
pub fn sd_mean_momentum(cfg: &SdConfig) -> f64 {
    cfg.state.p_incident
}

/// `p̄(x)⁻¹ ≃ (2/M) ∫dt P_SD(t;x) tΓ(x_i − x + p_i t/M)/(1 + (tħΓ/M)²)`,
/// integrated by trapezoid over `grid`.
pub fn sd_inverse_momentum(cfg: &SdConfig, grid: &TimeGrid) -> f64 {
    let (hbar, m, g, xi, pi, x) = cfg.parts();
    let integral: f64 = (0..grid.samples)
        .map(|i| {
            let t = grid.time(i);
            let spread = 1.0 + (t * hbar * g / m).powi(2);
            grid.weight(i) * sd_distribution(cfg, t) * t * g * (xi - x + pi * t / m) / spread
        })
        .sum();
    2.0 / m * integral
}
