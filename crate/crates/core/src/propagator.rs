//! Time-evolved wavefunction at a post-selected point, by quadrature over
//! the outgoing scattering eigenstates `|p⁺⟩`, `p > 0`.
//!
//! For `x > a` the eigenfunction is `T(p) e^{ipx/ħ}/√(2πħ)`; for `x < −a` it is
//! `(e^{ipx/ħ} + R(p) e^{−ipx/ħ})/√(2πħ)`. Both forms are exact outside the
//! square barrier, so evaluation inside `[−a − margin, a + margin]` is refused.
//!
//! The momentum integrand is reduced to one coefficient per node once per
//! post-selected point. Evaluating at time `t` is then a single pass over the
//! nodes in ascending order, producing `ψ`, `Ĥψ` (insert `p²/2M`) and `∂ₓψ`
//! together.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::controls::GridControls;
use crate::error::{Error, Result};
use crate::model::{Amplitude, CoherentState, PhysicalParams, System};
use crate::quadrature::CompositeRule;

/// Panel count is never refined past this.
const MAX_PANELS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub rule: CompositeRule,
    pub p_lo: f64,
    pub p_hi: f64,
    pub diagnostics: Vec<String>,
}

impl MomentumGrid {
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.rule.points
    }

    pub fn panel_count(&self) -> usize {
        self.rule.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.rule.nodes_per_panel
    }

    pub fn len(&self) -> usize {
        self.rule.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.points.is_empty()
    }

    fn with_panels(&self, panels: usize) -> Self {
        Self {
            rule: CompositeRule::new(self.p_lo, self.p_hi, panels, self.rule.nodes_per_panel),
            p_lo: self.p_lo,
            p_hi: self.p_hi,
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Same window, twice the panels.
    pub fn doubled(&self) -> Self {
        self.with_panels(2 * self.rule.panels)
    }

    /// Same window and panels, twice the nodes per panel.
    pub fn with_nodes_per_panel(&self, nodes_per_panel: usize) -> Self {
        Self {
            rule: CompositeRule::new(self.p_lo, self.p_hi, self.rule.panels, nodes_per_panel),
            ..self.clone()
        }
    }

    /// Refines panels until the integrand phase, whose slope in `p` is at
    /// most `phase_rate`, advances less than π/4 between adjacent nodes.
    pub fn refined_for_phase_rate(&self, phase_rate: f64) -> Result<Self> {
        let mut grid = self.clone();
        while grid.rule.max_gap() * phase_rate >= FRAC_PI_4 {
            let panels = 2 * grid.rule.panels;
            if panels > MAX_PANELS {
                return Err(Error::Convergence(format!(
                    "momentum grid cannot resolve phase rate {phase_rate:.3e} with {MAX_PANELS} panels"
                )));
            }
            grid = grid.with_panels(panels);
            let note = format!(
                "momentum panels increased to {panels} to keep phase advance below pi/4 (rate {phase_rate:.1})"
            );
            log::info!("{note}");
            grid.diagnostics.push(note);
        }
        Ok(grid)
    }
}

/// Composite Gauss-Legendre grid over `[max(ε_p, p_i − Wσ_p), p_i + Wσ_p]`.
pub fn build_momentum_grid(
    state: &CoherentState,
    params: &PhysicalParams,
    controls: &GridControls,
) -> Result<MomentumGrid> {
    if !(controls.window >= 6.0) {
        return Err(Error::InvalidConfig(vec![format!(
            "momentum window must be >= 6, got {}",
            controls.window
        )]));
    }
    let sigma = state.momentum_spread(params);
    let floor = controls.p_floor_fraction * state.p_incident;
    let mut p_lo = state.p_incident - controls.window * sigma;
    let p_hi = state.p_incident + controls.window * sigma;
    let mut diagnostics = Vec::new();
    if p_lo < floor {
        let note = format!(
            "momentum window lower bound {p_lo:.6} clamped to {floor:.3e} to keep p = 0 out of the grid"
        );
        log::info!("{note}");
        diagnostics.push(note);
        p_lo = floor;
    }
    Ok(MomentumGrid {
        rule: CompositeRule::new(p_lo, p_hi, controls.panels, controls.nodes_per_panel),
        p_lo,
        p_hi,
        diagnostics,
    })
}

/// Upper bound on `|∂/∂p|` of the integrand phase over `t ∈ [0, t_max]`.
pub fn phase_rate_bound(system: &System, x: f64, t_max: f64, p_hi: f64) -> f64 {
    let hbar = system.params.hbar;
    (x.abs() + system.state.x_center.abs() + 2.0 * system.barrier.half_width) / hbar
        + p_hi * t_max / (system.params.mass * hbar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelection {
    pub x: f64,
}

impl PostSelection {
    /// Rejects points within `margin` of the barrier, unless the barrier is
    /// switched off.
    pub fn new(x: f64, system: &System, margin: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("post-selected point must be finite, got {x}")));
        }
        let a = system.barrier.half_width;
        if !system.barrier.is_free() && x.abs() <= a + margin {
            return Err(Error::Domain(format!(
                "post-selected point x = {x} lies within the barrier region |x| <= {}",
                a + margin
            )));
        }
        Ok(Self { x })
    }
}

/// `ψ`, `Ĥψ` and `∂ₓψ` at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub psi: Amplitude,
    pub h_psi: Amplitude,
    pub d_psi: Amplitude,
}

impl PointValues {
    pub fn weak_momentum(&self, hbar: f64) -> Amplitude {
        -Amplitude::i() * hbar * self.d_psi / self.psi
    }

    pub fn weak_energy(&self) -> Amplitude {
        self.h_psi / self.psi
    }
}

/// Per-node coefficients for a fixed post-selected point.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub x: f64,
    hbar: f64,
    frequencies: Vec<f64>,
    energies: Vec<f64>,
    value: Vec<Amplitude>,
    slope: Vec<Amplitude>,
    /// `Σ|w·R*⟨−p|Ψ⟩| / Σ|w·⟨p|Ψ⟩|` over the grid.
    pub reflected_overlap_ratio: f64,
}

impl Propagator {
    pub fn new(sel: &PostSelection, grid: &MomentumGrid, system: &System) -> Result<Self> {
        let System { params, state, barrier } = system;
        let hbar = params.hbar;
        let norm = 1.0 / (2.0 * PI * hbar).sqrt();
        let x = sel.x;
        let transmitted = barrier.is_free() || x > 0.0;

        let n = grid.len();
        let mut frequencies = Vec::with_capacity(n);
        let mut energies = Vec::with_capacity(n);
        let mut value = Vec::with_capacity(n);
        let mut slope = Vec::with_capacity(n);
        let (mut direct_sum, mut reflected_sum) = (0.0, 0.0);

        for &(p, w) in grid.nodes() {
            let (direct, reflected) = barrier.overlap_terms(state, params, p)?;
            direct_sum += w * direct.norm();
            reflected_sum += w * reflected.norm();
            let overlap = (direct + reflected) * (w * norm);
            let k = p / hbar;
            let forward = Amplitude::from_polar(1.0, k * x);
            let ik = Amplitude::new(0.0, k);
            let (f, df) = if transmitted {
                let t = barrier.transmission(params, Amplitude::new(p, 0.0))?;
                (t * forward, ik * t * forward)
            } else {
                let r = barrier.reflection(params, Amplitude::new(p, 0.0))?;
                let backward = r * forward.conj();
                (forward + backward, ik * (forward - backward))
            };
            let e = params.energy(p);
            energies.push(e);
            frequencies.push(e / hbar);
            value.push(f * overlap);
            slope.push(df * overlap);
        }

        Ok(Self {
            x,
            hbar,
            frequencies,
            energies,
            value,
            slope,
            reflected_overlap_ratio: if direct_sum > 0.0 { reflected_sum / direct_sum } else { 0.0 },
        })
    }

    pub fn evaluate(&self, t: f64) -> PointValues {
        let mut psi = Amplitude::new(0.0, 0.0);
        let mut h_psi = Amplitude::new(0.0, 0.0);
        let mut d_psi = Amplitude::new(0.0, 0.0);
        for j in 0..self.value.len() {
            let (s, c) = (-self.frequencies[j] * t).sin_cos();
            let phase = Amplitude::new(c, s);
            let v = self.value[j] * phase;
            psi += v;
            h_psi += v * self.energies[j];
            d_psi += self.slope[j] * phase;
        }
        PointValues { psi, h_psi, d_psi }
    }

    pub fn wavefunction(&self, t: f64) -> Amplitude {
        let mut psi = Amplitude::new(0.0, 0.0);
        for j in 0..self.value.len() {
            let (s, c) = (-self.frequencies[j] * t).sin_cos();
            psi += self.value[j] * Amplitude::new(c, s);
        }
        psi
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and >= 0, got {t}")))
    }
}

pub fn wavefunction_at(
    sel: &PostSelection,
    t: f64,
    grid: &MomentumGrid,
    system: &System,
) -> Result<Amplitude> {
    check_time(t)?;
    Ok(Propagator::new(sel, grid, system)?.wavefunction(t))
}

/// `⟨x|Ĥ|Ψ_t⟩ = iħ ∂ₜ⟨x|Ψ_t⟩`.
pub fn hamiltonian_action_at(
    sel: &PostSelection,
    t: f64,
    grid: &MomentumGrid,
    system: &System,
) -> Result<Amplitude> {
    check_time(t)?;
    Ok(Propagator::new(sel, grid, system)?.evaluate(t).h_psi)
}

/// `∂ₓ⟨x|Ψ_t⟩`.
pub fn spatial_derivative_at(
    sel: &PostSelection,
    t: f64,
    grid: &MomentumGrid,
    system: &System,
) -> Result<Amplitude> {
    check_time(t)?;
    Ok(Propagator::new(sel, grid, system)?.evaluate(t).d_psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SquareBarrier;
    use approx::assert_relative_eq;

    fn reference_grid(system: &System) -> MomentumGrid {
        build_momentum_grid(&system.state, &system.params, &GridControls::default()).unwrap()
    }

    #[test]
    fn reference_window_is_clamped_with_diagnostic() {
        let system = System::reference();
        let grid = reference_grid(&system);
        let sigma = 0.0005f64.sqrt();
        assert_relative_eq!(sigma, 0.02236, epsilon = 1e-5);
        assert_relative_eq!(grid.p_lo, 0.25e-6, epsilon = 1e-18);
        assert_relative_eq!(grid.p_hi, 0.25 + 12.0 * sigma, epsilon = 1e-15);
        assert_eq!(grid.diagnostics.len(), 1);
        assert!(grid.nodes().windows(2).all(|w| w[0].0 < w[1].0));
        assert!(grid.nodes().iter().all(|&(p, w)| p > 0.0 && w > 0.0));
        assert_eq!(grid.len(), 40 * 50);
    }

    #[test]
    fn narrow_window_is_rejected() {
        let system = System::reference();
        let controls = GridControls { window: 5.0, ..Default::default() };
        assert!(build_momentum_grid(&system.state, &system.params, &controls).is_err());
    }

    #[test]
    fn grid_integrates_momentum_density() {
        let system = System::reference();
        let grid = reference_grid(&system);
        let total: f64 = grid
            .nodes()
            .iter()
            .map(|&(p, w)| w * system.state.momentum_wavefunction(&system.params, p).norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn phase_refinement_doubles_panels_until_resolved() {
        let system = System::reference();
        let grid = reference_grid(&system);
        let rate = 20.0 * FRAC_PI_4 / grid.rule.max_gap();
        let fine = grid.refined_for_phase_rate(rate).unwrap();
        assert!(fine.rule.max_gap() * rate < FRAC_PI_4);
        assert!(fine.panel_count() >= 20 * grid.panel_count() / 2);
        assert!(fine.diagnostics.len() > grid.diagnostics.len());
        assert!(grid.refined_for_phase_rate(1e12).is_err());
    }

    #[test]
    fn post_selection_margin() {
        let system = System::reference();
        assert!(PostSelection::new(100.0, &system, 1.0).is_ok());
        assert!(PostSelection::new(-2.5, &system, 1.0).is_ok());
        assert!(matches!(PostSelection::new(1.5, &system, 1.0), Err(Error::Domain(_))));
        assert!(PostSelection::new(1.5, &system.free(), 1.0).is_ok());
    }

    #[test]
    fn initial_free_wavefunction_at_packet_center() {
        let system = System::reference().free();
        let grid = reference_grid(&system);
        let sel = PostSelection::new(system.state.x_center, &system, 1.0).unwrap();
        let psi = wavefunction_at(&sel, 0.0, &grid, &system).unwrap();
        assert!((psi - Amplitude::new((0.001f64 / PI).powf(0.25), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn initial_free_log_derivative_and_energy() {
        let system = System::reference().free();
        let grid = reference_grid(&system);
        let (gamma, xi, pi) = (system.state.gamma, system.state.x_center, system.state.p_incident);
        for x in [xi - 20.0, xi, xi + 35.0] {
            let sel = PostSelection::new(x, &system, 1.0).unwrap();
            let v = Propagator::new(&sel, &grid, &system).unwrap().evaluate(0.0);
            let log_d = v.d_psi / v.psi;
            let want = Amplitude::new(-gamma * (x - xi), pi);
            assert!((log_d - want).norm() < 1e-10, "{log_d} vs {want}");
        }
        let sel = PostSelection::new(xi, &system, 1.0).unwrap();
        let v = Propagator::new(&sel, &grid, &system).unwrap().evaluate(0.0);
        // −(ħ²/2M)ψ''/ψ at the centre: p_i²/2M + ħ²Γ/2M.
        assert_relative_eq!(v.weak_energy().re, 0.0635, epsilon = 1e-10);
        assert!(v.weak_energy().im.abs() < 1e-10);
        assert!((v.weak_momentum(1.0) - Amplitude::new(0.25, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn negative_time_is_rejected() {
        let system = System::reference();
        let grid = reference_grid(&system);
        let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
        assert!(wavefunction_at(&sel, -1.0, &grid, &system).is_err());
    }

    #[test]
    fn reflected_overlap_is_negligible_for_reference() {
        let system = System::reference();
        let grid = reference_grid(&system);
        let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
        let prop = Propagator::new(&sel, &grid, &system).unwrap();
        assert!(prop.reflected_overlap_ratio < 1e-12);
        assert!(!SquareBarrier::reference().is_free());
    }
}
