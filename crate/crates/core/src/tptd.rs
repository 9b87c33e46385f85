//! Transition path time distribution `P(t;x) = |⟨x|Ψ_t⟩|² / N(x)` on a
//! uniform time grid, its moments, and the arrival-time momentum protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::GridControls;
use crate::error::{Error, Result};
use crate::model::System;
use crate::propagator::{
    build_momentum_grid, phase_rate_bound, MomentumGrid, PointValues, PostSelection, Propagator,
};
use crate::quadrature::trapezoid_weight;

/// Factor applied to `t_max` each time the tail check fails.
const EXTENSION_FACTOR: f64 = 1.5;
const MAX_EXTENSIONS: usize = 24;
/// Densities below this fraction of the peak are round-off, not tail.
pub const TAIL_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub samples: usize,
    pub spacing: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, samples: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
        }
        if samples < 2 {
            return Err(Error::Domain(format!("time grid needs >= 2 samples, got {samples}")));
        }
        Ok(Self { t_max, samples, spacing: t_max / (samples - 1) as f64 })
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            self.t_max
        } else {
            i as f64 * self.spacing
        }
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        trapezoid_weight(i, self.samples, self.spacing)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(|i| self.time(i))
    }

    /// First index of the last tenth of the grid.
    pub fn last_decade_start(&self) -> usize {
        ((self.samples - 1) * 9) / 10
    }

    /// Half the spacing over the same span.
    pub fn refined(&self) -> Self {
        Self::new(self.t_max, 2 * self.samples - 1).expect("refining a valid grid")
    }
}

/// `ψ`, `Ĥψ`, `∂ₓψ` sampled over a time grid at one point.
#[derive(Debug, Clone)]
pub struct TimeScan {
    pub x: f64,
    pub grid: TimeGrid,
    pub momentum: MomentumGrid,
    pub values: Vec<PointValues>,
    pub reflected_overlap_ratio: f64,
    pub hbar: f64,
}

/// Samples the post-selected point on a fixed time grid. The momentum grid
/// is refined first so the phase criterion holds up to `grid.t_max`.
pub fn scan_on(
    sel: &PostSelection,
    grid: TimeGrid,
    momentum: &MomentumGrid,
    system: &System,
) -> Result<TimeScan> {
    let rate = phase_rate_bound(system, sel.x, grid.t_max, momentum.p_hi);
    let momentum = momentum.refined_for_phase_rate(rate)?;
    let prop = Propagator::new(sel, &momentum, system)?;
    let values: Vec<PointValues> =
        (0..grid.samples).into_par_iter().map(|i| prop.evaluate(grid.time(i))).collect();
    Ok(TimeScan {
        x: sel.x,
        grid,
        momentum,
        values,
        reflected_overlap_ratio: prop.reflected_overlap_ratio,
        hbar: system.params.hbar,
    })
}

/// Initial `t_max`: classical arrival plus twenty steepest-descent widths.
pub fn initial_t_max(system: &System, x: f64) -> f64 {
    let s = &system.state;
    let sigma_t = (1.0 / (2.0 * s.gamma)).sqrt() * system.params.mass / s.p_incident;
    system.classical_time(x) + 20.0 * sigma_t
}

/// Samples with an adaptively extended `t_max` so the normalized mass in the
/// last tenth of the grid stays below `controls.eps_tail`.
pub fn scan(sel: &PostSelection, system: &System, controls: &GridControls) -> Result<TimeScan> {
    let momentum = build_momentum_grid(&system.state, &system.params, controls)?;
    let mut t_max = initial_t_max(system, sel.x);
    for _ in 0..MAX_EXTENSIONS {
        let grid = TimeGrid::new(t_max, controls.time_samples)?;
        let scan = scan_on(sel, grid, &momentum, system)?;
        let mass = tail_verdict(&scan, controls.eps_tail)?;
        if mass < controls.eps_tail {
            return Ok(scan);
        }
        log::info!("tail mass {mass:.3e} >= {:.1e} at t_max = {t_max:.1}; extending", controls.eps_tail);
        t_max *= EXTENSION_FACTOR;
    }
    Err(Error::Convergence(format!(
        "tail mass still above {:.1e} after {MAX_EXTENSIONS} extensions of t_max",
        controls.eps_tail
    )))
}

/// Normalized mass in the last tenth of the grid, or a convergence error if
/// the density is not decaying there.
fn tail_verdict(scan: &TimeScan, eps_tail: f64) -> Result<f64> {
    let check = TailCheck::of(scan);
    if check.mass >= eps_tail && !check.decaying {
        let g = &scan.grid;
        return Err(Error::Convergence(format!(
            "|psi(x={}, t)|^2 is not decaying over [{:.1}, {:.1}]; the normalization integral \
             does not appear to converge",
            scan.x,
            g.time(g.last_decade_start()),
            g.t_max
        )));
    }
    Ok(check.mass)
}

struct TailCheck {
    mass: f64,
    decaying: bool,
}

impl TailCheck {
    fn of(scan: &TimeScan) -> Self {
        let g = &scan.grid;
        let dens: Vec<f64> = scan.values.iter().map(|v| v.psi.norm_sqr()).collect();
        let total: f64 = dens.iter().enumerate().map(|(i, d)| g.weight(i) * d).sum();
        let start = g.last_decade_start();
        let tail: f64 = (start..g.samples).map(|i| g.weight(i) * dens[i]).sum();
        let decaying = dens[g.samples - 1] < dens[start];
        Self { mass: if total > 0.0 { tail / total } else { f64::INFINITY }, decaying }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TptDistribution {
    pub x: f64,
    pub grid: TimeGrid,
    pub density: Vec<f64>,
    /// `N(x) = ∫₀^{t_max} |⟨x|Ψ_t⟩|² dt`.
    pub normalization: f64,
    /// Normalized mass in the last tenth of the grid.
    pub tail_mass_estimate: f64,
    /// Least-squares slope of `ln P` against `ln t` over the last tenth,
    /// using samples above `TAIL_FLOOR` times the peak; NaN if none are.
    pub tail_slope: f64,
}

impl TptDistribution {
    pub fn from_scan(scan: &TimeScan) -> Result<Self> {
        let grid = scan.grid;
        let raw: Vec<f64> = scan.values.iter().map(|v| v.psi.norm_sqr()).collect();
        let normalization: f64 = raw.iter().enumerate().map(|(i, d)| grid.weight(i) * d).sum();
        if !(normalization > 0.0 && normalization.is_finite()) {
            return Err(Error::Convergence(format!(
                "normalization integral N(x={}) = {normalization} is not positive",
                scan.x
            )));
        }
        let density: Vec<f64> = raw.iter().map(|d| d / normalization).collect();
        let start = grid.last_decade_start();
        let tail_mass_estimate = (start..grid.samples).map(|i| grid.weight(i) * density[i]).sum();
        let tail_slope = log_log_slope(&grid, &density, start);
        Ok(Self { x: scan.x, grid, density, normalization, tail_mass_estimate, tail_slope })
    }

    /// `Σ w_i tⁿ P(t_i)` for `n ∈ {0, 1, 2}`.
    pub fn time_moment(&self, n: u32) -> Result<f64> {
        if n > 2 {
            return Err(Error::Unsupported(format!(
                "time moment of order {n}: only n <= 2 converge for a t^-3 tail"
            )));
        }
        Ok(self
            .density
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let t = self.grid.time(i);
                self.grid.weight(i) * t.powi(n as i32) * p
            })
            .sum())
    }

    pub fn mean_time(&self) -> f64 {
        self.time_moment(1).expect("first moment is supported")
    }

    pub fn time_variance(&self) -> f64 {
        let m1 = self.mean_time();
        self.time_moment(2).expect("second moment is supported") - m1 * m1
    }

    /// `P(0;x)`.
    pub fn at_zero(&self) -> f64 {
        self.density[0]
    }

    pub fn peak(&self) -> (f64, f64) {
        let (i, p) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        (self.grid.time(i), p)
    }

    pub fn total_mass(&self) -> f64 {
        self.time_moment(0).expect("zeroth moment is supported")
    }
}

fn log_log_slope(grid: &TimeGrid, density: &[f64], start: usize) -> f64 {
    let floor = TAIL_FLOOR * density.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = (start.max(1)..grid.samples)
        .filter(|&i| density[i] > floor)
        .map(|i| (grid.time(i).ln(), density[i].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub fn build_distribution(
    sel: &PostSelection,
    system: &System,
    controls: &GridControls,
) -> Result<TptDistribution> {
    TptDistribution::from_scan(&scan(sel, system, controls)?)
}

pub fn time_moment(dist: &TptDistribution, n: u32) -> Result<f64> {
    dist.time_moment(n)
}

pub fn mean_arrival_time(sel: &PostSelection, system: &System, controls: &GridControls) -> Result<f64> {
    Ok(build_distribution(sel, system, controls)?.mean_time())
}

/// Outcome of the finite-difference arrival-time protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalMomentum {
    /// Richardson-extrapolated momentum.
    pub momentum: f64,
    /// `M δx / Δ⟨t⟩` at separation `δx`.
    pub coarse: f64,
    /// Same at `δx/2`.
    pub fine: f64,
    pub delta_x: f64,
    pub t_max: f64,
}

/// `M δx / (⟨t(x + δx/2)⟩ − ⟨t(x − δx/2)⟩)`, extrapolated from `δx` and
/// `δx/2` to remove the `O(δx²)` error. All four points share one time grid.
pub fn arrival_time_momentum(
    x: f64,
    delta_x: f64,
    system: &System,
    controls: &GridControls,
) -> Result<ArrivalMomentum> {
    let sels = arrival_points(x, delta_x, system, controls)?;
    // The farthest point from the source arrives last and sets t_max.
    let far = sels
        .iter()
        .max_by(|a, b| system.classical_time(a.x).total_cmp(&system.classical_time(b.x)))
        .expect("four points");
    let reference = scan(far, system, controls)?;
    arrival_time_momentum_on(x, delta_x, reference.grid, &reference.momentum, system, controls)
}

/// Arrival-time momentum on a caller-supplied time grid and momentum grid.
pub fn arrival_time_momentum_on(
    x: f64,
    delta_x: f64,
    grid: TimeGrid,
    momentum: &MomentumGrid,
    system: &System,
    controls: &GridControls,
) -> Result<ArrivalMomentum> {
    let sels = arrival_points(x, delta_x, system, controls)?;
    let rate = sels
        .iter()
        .map(|s| phase_rate_bound(system, s.x, grid.t_max, momentum.p_hi))
        .fold(0.0, f64::max);
    let momentum = momentum.refined_for_phase_rate(rate)?;

    let means = sels
        .iter()
        .map(|s| Ok(TptDistribution::from_scan(&scan_on(s, grid, &momentum, system)?)?.mean_time()))
        .collect::<Result<Vec<f64>>>()?;

    let mass = system.params.mass;
    let estimate = |dt: f64, dx: f64| -> Result<f64> {
        if dt.abs() < grid.spacing {
            return Err(Error::Resolution(format!(
                "mean-time difference {dt:.3e} over delta_x = {dx} is below the time step {:.3e}; \
                 use a larger delta_x",
                grid.spacing
            )));
        }
        Ok(mass * dx / dt)
    };
    let coarse = estimate(means[1] - means[0], delta_x)?;
    let fine = estimate(means[3] - means[2], 0.5 * delta_x)?;
    Ok(ArrivalMomentum {
        momentum: (4.0 * fine - coarse) / 3.0,
        coarse,
        fine,
        delta_x,
        t_max: grid.t_max,
    })
}

fn arrival_points(
    x: f64,
    delta_x: f64,
    system: &System,
    controls: &GridControls,
) -> Result<Vec<PostSelection>> {
    if !(delta_x > 0.0 && delta_x.is_finite()) {
        return Err(Error::Domain(format!("delta_x must be positive, got {delta_x}")));
    }
    [-0.5 * delta_x, 0.5 * delta_x, -0.25 * delta_x, 0.25 * delta_x]
        .iter()
        .map(|d| PostSelection::new(x + d, system, controls.margin))
        .collect()
}
