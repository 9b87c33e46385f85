//! Physical system: units, the initial coherent state and the square barrier.
//!
//! Every formula carries `hbar` and `mass` explicitly. The reference
//! experiment runs in atomic units with `hbar = 1`, `mass = 1/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude carrier for wavefunction values and scattering amplitudes.
pub type Amplitude = Complex64;

/// `Γ·x_i²` below this raises the far-field warning.
pub const FAR_FIELD_THRESHOLD: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 0.5 }
    }
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let p = Self { hbar, mass };
        p.validate().map_err(Error::InvalidConfig)?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            errs.push(format!("hbar must be positive and finite, got {}", self.hbar));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            errs.push(format!("mass must be positive and finite, got {}", self.mass));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Kinetic energy `p²/2M` of a (possibly complex) momentum.
    #[inline]
    pub fn energy(&self, p: f64) -> f64 {
        p * p / (2.0 * self.mass)
    }
}

/// Gaussian coherent state
/// `(Γ/π)^{1/4} exp(−Γ(x−x_i)²/2 + i p_i (x−x_i)/ħ)`.
///
/// `global_phase` multiplies the whole state by `e^{iφ}`; every observable
/// in this crate is ratio-defined and must not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub gamma: f64,
    pub x_center: f64,
    pub p_incident: f64,
    #[serde(default)]
    pub global_phase: f64,
}

impl CoherentState {
    pub fn new(gamma: f64, x_center: f64, p_incident: f64) -> Result<Self> {
        let s = Self { gamma, x_center, p_incident, global_phase: 0.0 };
        s.validate().map_err(Error::InvalidConfig)?;
        if let Some(w) = s.far_field_warning() {
            log::warn!("{w}");
        }
        Ok(s)
    }

    /// Reference state of the tunneling experiment: `Γ = 0.001`, `x_i = −100`, `p_i = 1/4`.
    pub fn reference() -> Self {
        Self { gamma: 0.001, x_center: -100.0, p_incident: 0.25, global_phase: 0.0 }
    }

    pub fn with_global_phase(mut self, phase: f64) -> Self {
        self.global_phase = phase;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            errs.push(format!("gamma must be positive and finite, got {}", self.gamma));
        }
        if !(self.p_incident.is_finite() && self.p_incident > 0.0) {
            errs.push(format!("p_incident must be positive, got {}", self.p_incident));
        }
        if !self.x_center.is_finite() {
            errs.push("x_center must be finite".to_string());
        }
        if !self.global_phase.is_finite() {
            errs.push("global_phase must be finite".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Returns a diagnostic when the initial packet overlaps the interaction region.
    pub fn far_field_warning(&self) -> Option<String> {
        let measure = self.gamma * self.x_center * self.x_center;
        (measure < FAR_FIELD_THRESHOLD).then(|| {
            format!(
                "far-field condition weak: gamma*x_i^2 = {measure:.3} < {FAR_FIELD_THRESHOLD}; \
                 initial leakage into the barrier region is not negligible"
            )
        })
    }

    /// Standard deviation of the momentum distribution, `ħ√(Γ/2)`.
    pub fn momentum_spread(&self, params: &PhysicalParams) -> f64 {
        params.hbar * (self.gamma / 2.0).sqrt()
    }

    fn phase_factor(&self) -> Amplitude {
        Amplitude::from_polar(1.0, self.global_phase)
    }

    /// `⟨x|Ψ₀⟩`.
    pub fn position_wavefunction(&self, params: &PhysicalParams, x: f64) -> Amplitude {
        let dx = x - self.x_center;
        let norm = (self.gamma / PI).powf(0.25);
        let exponent =
            Amplitude::new(-0.5 * self.gamma * dx * dx, self.p_incident * dx / params.hbar);
        norm * exponent.exp() * self.phase_factor()
    }

    /// `⟨p|Ψ₀⟩`: Gaussian about `p_i` with variance `ħ²Γ/2` in `|⟨p|Ψ₀⟩|²`,
    /// carrying the phase `e^{−i p x_i/ħ}`.
    pub fn momentum_wavefunction(&self, params: &PhysicalParams, p: f64) -> Amplitude {
        let hbar = params.hbar;
        let dp = p - self.p_incident;
        let norm = (1.0 / (PI * hbar * hbar * self.gamma)).powf(0.25);
        let exponent = Amplitude::new(
            -dp * dp / (2.0 * hbar * hbar * self.gamma),
            -p * self.x_center / hbar,
        );
        norm * exponent.exp() * self.phase_factor()
    }
}

/// Square barrier of height `V0` on `[−a, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareBarrier {
    pub height: f64,
    pub half_width: f64,
}

impl SquareBarrier {
    pub fn new(height: f64, half_width: f64) -> Result<Self> {
        let b = Self { height, half_width };
        b.validate().map_err(Error::InvalidConfig)?;
        Ok(b)
    }

    /// Unit-height barrier of width 2 centered at the origin.
    pub fn reference() -> Self {
        Self { height: 1.0, half_width: 1.0 }
    }

    pub fn free(half_width: f64) -> Self {
        Self { height: 0.0, half_width }
    }

    pub fn is_free(&self) -> bool {
        self.height == 0.0
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            errs.push(format!("half_width must be positive, got {}", self.half_width));
        }
        if !self.height.is_finite() {
            errs.push(format!("barrier height must be finite, got {}", self.height));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// `(cos 2qa, sin(2qa)/q)`, both even in `q`, from `q²`.
    fn even_parts(&self, q2: Amplitude) -> (Amplitude, Amplitude) {
        let width = 2.0 * self.half_width;
        // Either root works: both outputs are even in q.
        let q = q2.sqrt();
        let z = q * width;
        let cos = z.cos();
        let sinc_scaled = if z.norm() < 1e-4 {
            let z2 = z * z;
            width * (1.0 - z2 / 6.0 + z2 * z2 / 120.0)
        } else {
            z.sin() / q
        };
        (cos, sinc_scaled)
    }

    /// `q² = 2M(E − V0)/ħ²` at complex momentum.
    fn q_squared(&self, params: &PhysicalParams, p: Amplitude) -> Amplitude {
        let hbar2 = params.hbar * params.hbar;
        p * p / hbar2 - 2.0 * params.mass * self.height / hbar2
    }

    fn check_momentum(p: Amplitude) -> Result<()> {
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::Domain(format!("momentum must be finite, got {p}")));
        }
        if p.norm() == 0.0 {
            return Err(Error::Domain("scattering amplitudes are singular at p = 0".into()));
        }
        Ok(())
    }

    /// Denominator `cos(2qa) − i (k²+q²)/(2k) · sin(2qa)/q`.
    fn denominator(&self, params: &PhysicalParams, p: Amplitude, q2: Amplitude) -> Amplitude {
        let k = p / params.hbar;
        let (cos, sinc) = self.even_parts(q2);
        cos - Amplitude::i() * (k * k + q2) / (2.0 * k) * sinc
    }

    /// Transmission amplitude `T(p)`, analytic in complex `p` away from `p = 0`.
    pub fn transmission(&self, params: &PhysicalParams, p: Amplitude) -> Result<Amplitude> {
        Self::check_momentum(p)?;
        if self.is_free() {
            return Ok(Amplitude::new(1.0, 0.0));
        }
        let k = p / params.hbar;
        let q2 = self.q_squared(params, p);
        let lead = (-Amplitude::i() * k * (2.0 * self.half_width)).exp();
        Ok(lead / self.denominator(params, p, q2))
    }

    /// Reflection amplitude `R(p)`.
    pub fn reflection(&self, params: &PhysicalParams, p: Amplitude) -> Result<Amplitude> {
        Self::check_momentum(p)?;
        if self.is_free() {
            return Ok(Amplitude::new(0.0, 0.0));
        }
        let k = p / params.hbar;
        let q2 = self.q_squared(params, p);
        let (_, sinc) = self.even_parts(q2);
        let t = self.transmission(params, p)?;
        Ok(Amplitude::i() * (q2 - k * k) / (2.0 * k) * sinc * t)
    }

    /// Both amplitudes at real momentum.
    pub fn amplitudes(&self, params: &PhysicalParams, p: f64) -> Result<(Amplitude, Amplitude)> {
        let p = Amplitude::new(p, 0.0);
        Ok((self.transmission(params, p)?, self.reflection(params, p)?))
    }

    /// Overlap `⟨p⁺|Ψ₀⟩ = ⟨p|Ψ₀⟩ + R*(p)⟨−p|Ψ₀⟩` for `p > 0`.
    pub fn scattering_overlap(
        &self,
        state: &CoherentState,
        params: &PhysicalParams,
        p: f64,
    ) -> Result<Amplitude> {
        let (direct, reflected) = self.overlap_terms(state, params, p)?;
        Ok(direct + reflected)
    }

    /// The direct and reflected contributions to [`Self::scattering_overlap`].
    pub fn overlap_terms(
        &self,
        state: &CoherentState,
        params: &PhysicalParams,
        p: f64,
    ) -> Result<(Amplitude, Amplitude)> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("overlap requires p > 0, got {p}")));
        }
        let direct = state.momentum_wavefunction(params, p);
        if self.is_free() {
            return Ok((direct, Amplitude::new(0.0, 0.0)));
        }
        let r = self.reflection(params, Amplitude::new(p, 0.0))?;
        Ok((direct, r.conj() * state.momentum_wavefunction(params, -p)))
    }
}

/// The full physical setup: units, initial state and potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub params: PhysicalParams,
    pub state: CoherentState,
    pub barrier: SquareBarrier,
}

impl System {
    pub fn reference() -> Self {
        Self {
            params: PhysicalParams::default(),
            state: CoherentState::reference(),
            barrier: SquareBarrier::reference(),
        }
    }

    /// Same state and units with the barrier switched off.
    pub fn free(&self) -> Self {
        Self { barrier: SquareBarrier::free(self.barrier.half_width), ..*self }
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        for r in [self.params.validate(), self.state.validate(), self.barrier.validate()] {
            if let Err(e) = r {
                errs.extend(e);
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Classical arrival time `M|x − x_i|/p_i`.
    pub fn classical_time(&self, x: f64) -> f64 {
        self.params.mass * (x - self.state.x_center).abs() / self.state.p_incident
    }
}

pub fn position_wavefunction_initial(
    state: &CoherentState,
    params: &PhysicalParams,
    x: f64,
) -> Amplitude {
    state.position_wavefunction(params, x)
}

pub fn momentum_wavefunction_initial(
    state: &CoherentState,
    params: &PhysicalParams,
    p: f64,
) -> Amplitude {
    state.momentum_wavefunction(params, p)
}

pub fn transmission_amplitude(
    barrier: &SquareBarrier,
    params: &PhysicalParams,
    p: Amplitude,
) -> Result<Amplitude> {
    barrier.transmission(params, p)
}

pub fn reflection_amplitude(
    barrier: &SquareBarrier,
    params: &PhysicalParams,
    p: f64,
) -> Result<Amplitude> {
    barrier.reflection(params, Amplitude::new(p, 0.0))
}

pub fn scattering_overlap(
    state: &CoherentState,
    barrier: &SquareBarrier,
    params: &PhysicalParams,
    p: f64,
) -> Result<Amplitude> {
    barrier.scattering_overlap(state, params, p)
}
