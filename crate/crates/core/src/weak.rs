//! Weak values of momentum and energy at the post-selected point, their
//! time averages over `P(t;x)`, and the weak-value time-energy relations.
//!
//! Variances follow the `|·|²` convention: `⟨|O_w|²⟩ − (Re⟨O_w⟩)²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::GridControls;
use crate::error::{Error, Result};
use crate::model::{Amplitude, System};
use crate::propagator::{
    build_momentum_grid, phase_rate_bound, MomentumGrid, PostSelection, Propagator,
};
use crate::quadrature::CompositeRule;
use crate::tptd::{scan, scan_on, TimeGrid, TimeScan, TptDistribution};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakValueSeries {
    pub x: f64,
    pub grid: TimeGrid,
    pub p_weak: Vec<Amplitude>,
    pub h_weak: Vec<Amplitude>,
    /// `false` where `|ψ|` is below the mask floor; those samples are skipped.
    pub valid: Vec<bool>,
}

/// One unmasked time sample handed to a time-average functional.
#[derive(Debug, Clone, Copy)]
pub struct WeakSample {
    pub t: f64,
    pub p_weak: Amplitude,
    pub h_weak: Amplitude,
}

impl WeakValueSeries {
    pub fn from_scan(scan: &TimeScan, mask_floor: f64) -> Self {
        let peak = scan.values.iter().map(|v| v.psi.norm()).fold(0.0, f64::max);
        let floor = mask_floor * peak;
        let mut p_weak = Vec::with_capacity(scan.values.len());
        let mut h_weak = Vec::with_capacity(scan.values.len());
        let mut valid = Vec::with_capacity(scan.values.len());
        for v in &scan.values {
            if v.psi.norm() > floor {
                p_weak.push(v.weak_momentum(scan.hbar));
                h_weak.push(v.weak_energy());
                valid.push(true);
            } else {
                p_weak.push(Amplitude::new(0.0, 0.0));
                h_weak.push(Amplitude::new(0.0, 0.0));
                valid.push(false);
            }
        }
        Self { x: scan.x, grid: scan.grid, p_weak, h_weak, valid }
    }

    pub fn samples(&self) -> impl Iterator<Item = (usize, WeakSample)> + '_ {
        (0..self.grid.samples).filter(|&i| self.valid[i]).map(|i| {
            (i, WeakSample { t: self.grid.time(i), p_weak: self.p_weak[i], h_weak: self.h_weak[i] })
        })
    }

    /// Probability mass of `P(t;x)` on masked samples.
    pub fn masked_mass(&self, dist: &TptDistribution) -> f64 {
        (0..self.grid.samples)
            .filter(|&i| !self.valid[i])
            .map(|i| self.grid.weight(i) * dist.density[i])
            .sum()
    }
}

/// `∫dt P(t;x) f(t)` over unmasked samples.
pub fn time_average<F>(series: &WeakValueSeries, dist: &TptDistribution, f: F) -> Result<Amplitude>
where
    F: Fn(WeakSample) -> Amplitude,
{
    if series.grid != dist.grid || series.x != dist.x {
        return Err(Error::Domain(
            "weak-value series and distribution must share the point and time grid".into(),
        ));
    }
    let mut acc = Amplitude::new(0.0, 0.0);
    for (i, s) in series.samples() {
        acc += f(s) * (dist.grid.weight(i) * dist.density[i]);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean_p: f64,
    pub var_p: f64,
    pub mean_h: f64,
    pub var_h: f64,
    pub mean_t: f64,
    pub var_t: f64,
    pub commutator: Amplitude,
    /// `⟨t²⟩⟨HH*⟩`.
    pub product_second_moment: f64,
    /// `√(⟨Δt²⟩⟨ΔHΔH*⟩)`.
    pub product_stddev: f64,
    /// `(ħ/2)(1 − ⟨t⟩P(0;x))`.
    pub bound_rhs: f64,
    pub hbar: f64,
    /// Imaginary parts of the mean weak momentum and energy.
    pub mean_p_imag: f64,
    pub mean_h_imag: f64,
    pub p_at_zero: f64,
    pub masked_mass: f64,
}

impl MomentSummary {
    pub fn std_p(&self) -> f64 {
        self.var_p.sqrt()
    }

    pub fn variance_product(&self) -> f64 {
        self.var_t * self.var_h
    }

    /// `⟨t²⟩⟨HH*⟩ ≥ ħ²/4`.
    pub fn second_moment_bound_holds(&self) -> bool {
        self.product_second_moment >= 0.25 * self.hbar * self.hbar
    }

    /// `√(⟨Δt²⟩⟨ΔHΔH*⟩) ≥ (ħ/2)(1 − ⟨t⟩P(0;x))`.
    pub fn stddev_bound_holds(&self) -> bool {
        self.product_stddev >= self.bound_rhs
    }

    /// `iħ(1 − ⟨t⟩P(0;x))`.
    pub fn expected_commutator(&self) -> Amplitude {
        Amplitude::new(0.0, self.hbar * (1.0 - self.mean_t * self.p_at_zero))
    }
}

pub fn summarize(series: &WeakValueSeries, dist: &TptDistribution, hbar: f64) -> Result<MomentSummary> {
    let avg = |f: &dyn Fn(WeakSample) -> Amplitude| time_average(series, dist, f);
    let mean_p = avg(&|s| s.p_weak)?;
    let p2 = avg(&|s| Amplitude::new(s.p_weak.norm_sqr(), 0.0))?.re;
    let mean_h = avg(&|s| s.h_weak)?;
    let h2 = avg(&|s| Amplitude::new(s.h_weak.norm_sqr(), 0.0))?.re;
    let commutator = avg(&|s| (s.h_weak.conj() - s.h_weak) * s.t)?;

    let t1 = dist.time_moment(1)?;
    let t2 = dist.time_moment(2)?;
    let var_t = t2 - t1 * t1;
    let var_h = h2 - mean_h.re * mean_h.re;
    let p_at_zero = dist.at_zero();
    Ok(MomentSummary {
        mean_p: mean_p.re,
        var_p: p2 - mean_p.re * mean_p.re,
        mean_h: mean_h.re,
        var_h,
        mean_t: t1,
        var_t,
        commutator,
        product_second_moment: t2 * h2,
        product_stddev: (var_t * var_h).sqrt(),
        bound_rhs: 0.5 * hbar * (1.0 - t1 * p_at_zero),
        hbar,
        mean_p_imag: mean_p.im,
        mean_h_imag: mean_h.im,
        p_at_zero,
        masked_mass: series.masked_mass(dist),
    })
}

/// Distribution, weak-value series and their summary for one point.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub scan: TimeScan,
    pub distribution: TptDistribution,
    pub series: WeakValueSeries,
    pub summary: MomentSummary,
}

impl Analysis {
    pub fn from_scan(scan: TimeScan, controls: &GridControls) -> Result<Self> {
        let distribution = TptDistribution::from_scan(&scan)?;
        let series = WeakValueSeries::from_scan(&scan, controls.mask_floor);
        let summary = summarize(&series, &distribution, scan.hbar)?;
        Ok(Self { scan, distribution, series, summary })
    }
}

pub fn analyze(sel: &PostSelection, system: &System, controls: &GridControls) -> Result<Analysis> {
    Analysis::from_scan(scan(sel, system, controls)?, controls)
}

/// Re-runs the analysis on a fixed time grid with the given momentum grid.
pub fn analyze_on(
    sel: &PostSelection,
    grid: TimeGrid,
    momentum: &MomentumGrid,
    system: &System,
    controls: &GridControls,
) -> Result<Analysis> {
    Analysis::from_scan(scan_on(sel, grid, momentum, system)?, controls)
}

pub fn weak_momentum_series(
    sel: &PostSelection,
    system: &System,
    controls: &GridControls,
) -> Result<WeakValueSeries> {
    Ok(WeakValueSeries::from_scan(&scan(sel, system, controls)?, controls.mask_floor))
}

pub fn weak_energy_series(
    sel: &PostSelection,
    system: &System,
    controls: &GridControls,
) -> Result<WeakValueSeries> {
    weak_momentum_series(sel, system, controls)
}

pub fn momentum_stddev(sel: &PostSelection, system: &System, controls: &GridControls) -> Result<f64> {
    Ok(analyze(sel, system, controls)?.summary.std_p())
}

/// `∫dt P(t;x) t [H_w* − H_w]`.
pub fn commutator_check(
    sel: &PostSelection,
    system: &System,
    controls: &GridControls,
) -> Result<Amplitude> {
    Ok(analyze(sel, system, controls)?.summary.commutator)
}

pub fn uncertainty_report(
    sel: &PostSelection,
    system: &System,
    controls: &GridControls,
) -> Result<MomentSummary> {
    Ok(analyze(sel, system, controls)?.summary)
}

/// `iħ ∂ₜ ln⟨x|Ψ_t⟩` by central differences with one Richardson step.
pub fn weak_energy_log_derivative(prop: &Propagator, t: f64, step: f64) -> Result<Amplitude> {
    if !(step > 0.0 && t >= step) {
        return Err(Error::Domain(format!("need t >= step > 0, got t = {t}, step = {step}")));
    }
    let central = |h: f64| (prop.wavefunction(t + h) - prop.wavefunction(t - h)) / (2.0 * h);
    let d = (4.0 * central(0.5 * step) - central(step)) / 3.0;
    Ok(Amplitude::i() * prop.hbar() * d / prop.wavefunction(t))
}

/// `−(ħ/2) ∂ₓ ln P(t;x)` on the series' time grid, from distributions at
/// `x ± step` that are each normalized on their own.
pub fn log_density_gradient(
    x: f64,
    step: f64,
    grid: TimeGrid,
    system: &System,
    controls: &GridControls,
) -> Result<Vec<f64>> {
    let momentum = build_momentum_grid(&system.state, &system.params, controls)?;
    let rate = phase_rate_bound(system, x + step.abs(), grid.t_max, momentum.p_hi);
    let momentum = momentum.refined_for_phase_rate(rate)?;
    let dist = |xx: f64| -> Result<TptDistribution> {
        let sel = PostSelection::new(xx, system, controls.margin)?;
        TptDistribution::from_scan(&scan_on(&sel, grid, &momentum, system)?)
    };
    let dist_at = |h: f64| -> Result<Vec<f64>> {
        let (plus, minus) = (dist(x + h)?, dist(x - h)?);
        Ok(plus
            .density
            .iter()
            .zip(&minus.density)
            .map(|(p, m)| (p.ln() - m.ln()) / (2.0 * h))
            .collect())
    };
    let coarse = dist_at(step)?;
    let fine = dist_at(0.5 * step)?;
    let hbar = system.params.hbar;
    Ok(coarse.iter().zip(&fine).map(|(c, f)| -0.5 * hbar * (4.0 * f - c) / 3.0).collect())
}

/// Position rule covering the freely moving packet at time `t`: centre
/// `x_i + p_i t/M`, half-width `span` standard deviations.
pub fn packet_rule(system: &System, t: f64, span: f64, panels: usize, nodes: usize) -> CompositeRule {
    let s = &system.state;
    let p = &system.params;
    let spread = 1.0 + (p.hbar * s.gamma * t / p.mass).powi(2);
    let sigma_x = (spread / (2.0 * s.gamma)).sqrt();
    let centre = s.x_center + s.p_incident * t / p.mass;
    CompositeRule::new(centre - span * sigma_x, centre + span * sigma_x, panels, nodes)
}

/// `∫dx |⟨x|Ψ_t⟩|² p_w(t;x)`, which must equal `⟨Ψ_t|p̂|Ψ_t⟩`. Free particle only.
pub fn spatial_average_check(
    t: f64,
    x_rule: &CompositeRule,
    system: &System,
    controls: &GridControls,
) -> Result<Amplitude> {
    if !system.barrier.is_free() {
        return Err(Error::Domain(
            "spatial averaging needs eigenfunctions inside the barrier; use V0 = 0".into(),
        ));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let momentum = build_momentum_grid(&system.state, &system.params, controls)?;
    let x_extent = x_rule.lo.abs().max(x_rule.hi.abs());
    let momentum =
        momentum.refined_for_phase_rate(phase_rate_bound(system, x_extent, t, momentum.p_hi))?;
    let hbar = system.params.hbar;
    let terms = x_rule
        .points
        .par_iter()
        .map(|&(x, w)| {
            let sel = PostSelection::new(x, system, controls.margin)?;
            let v = Propagator::new(&sel, &momentum, system)?.evaluate(t);
            Ok(if v.psi.norm() > 0.0 { v.weak_momentum(hbar) * (w * v.psi.norm_sqr()) } else { Amplitude::new(0.0, 0.0) })
        })
        .collect::<Result<Vec<Amplitude>>>()?;
    Ok(terms.into_iter().sum())
}
