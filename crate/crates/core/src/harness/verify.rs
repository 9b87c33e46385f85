//! Invariant suite behind `weaktime verify`.

use serde::{Deserialize, Serialize};

use crate::controls::GridControls;
use crate::error::Result;
use crate::model::{Amplitude, System};
use crate::propagator::{build_momentum_grid, phase_rate_bound, PostSelection, Propagator};
use crate::steepest::{sd_wavefunction, SdConfig};
use crate::weak::{
    log_density_gradient, packet_rule, spatial_average_check, weak_energy_log_derivative, Analysis,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub experiment: String,
    pub config_sha256: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<28} value={:.3e} tol={:.1e}  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance,
                    c.detail
                )
            })
            .collect()
    }
}

pub fn unitarity(analysis: &Analysis, system: &System) -> Result<Check> {
    let mut worst = 0.0f64;
    for &(p, _) in analysis.scan.momentum.nodes() {
        let (t, r) = system.barrier.amplitudes(&system.params, p)?;
        worst = worst.max((t.norm_sqr() + r.norm_sqr() - 1.0).abs());
    }
    Ok(Check::at_most(
        "unitarity",
        worst,
        1e-12,
        format!("max ||T|^2 + |R|^2 - 1| over {} momentum nodes", analysis.scan.momentum.len()),
    ))
}

pub fn normalization(analysis: &Analysis, controls: &GridControls) -> Vec<Check> {
    let d = &analysis.distribution;
    vec![
        Check::at_most(
            "normalization",
            (d.total_mass() - 1.0).abs(),
            1e-12,
            format!("N(x) = {:.6e}", d.normalization),
        ),
        Check::at_most(
            "tail_mass",
            d.tail_mass_estimate,
            controls.eps_tail,
            format!("mass in last tenth of [0, {:.1}]", d.grid.t_max),
        ),
        if d.tail_slope.is_nan() {
            Check {
                name: "tail_slope".into(),
                passed: true,
                value: d.tail_slope,
                tolerance: -2.5,
                detail: "last tenth lies below the round-off floor".into(),
            }
        } else {
            Check::at_most("tail_slope", d.tail_slope, -2.5, "d ln P / d ln t over the last tenth")
        },
    ]
}

/// Compares the quadrature propagator with the closed-form free Gaussian on
/// a lattice of points that follows the packet.
pub fn free_particle_oracle(system: &System, x: f64, controls: &GridControls) -> Result<Check> {
    let free = system.free();
    let s = &free.state;
    let p = &free.params;
    let t_end = 1.5 * free.classical_time(x).max(1.0);
    let mut points = Vec::new();
    for j in 0..10 {
        let t = t_end * j as f64 / 9.0;
        let spread = 1.0 + (p.hbar * s.gamma * t / p.mass).powi(2);
        let sigma_x = (spread / (2.0 * s.gamma)).sqrt();
        let centre = s.x_center + s.p_incident * t / p.mass;
        for k in 0..10 {
            points.push((centre + sigma_x * (-3.0 + 6.0 * k as f64 / 9.0), t));
        }
    }
    let x_extent = points.iter().map(|q| q.0.abs()).fold(0.0, f64::max);
    let grid = build_momentum_grid(s, p, controls)?;
    let grid = grid.refined_for_phase_rate(phase_rate_bound(&free, x_extent, t_end, grid.p_hi))?;
    let mut worst = 0.0f64;
    for &(xx, t) in &points {
        let sel = PostSelection::new(xx, &free, controls.margin)?;
        let got = Propagator::new(&sel, &grid, &free)?.wavefunction(t);
        let cfg = SdConfig::new(&free, xx);
        let want = sd_wavefunction(&cfg, t)?;
        let peak = (s.gamma / std::f64::consts::PI).powf(0.25)
            / (1.0 + (p.hbar * s.gamma * t / p.mass).powi(2)).powf(0.25);
        worst = worst.max((got - want).norm() / peak);
    }
    Ok(Check::at_most(
        "free_particle_oracle",
        worst,
        1e-8,
        format!("max |psi - psi_exact| / peak over {} (x, t) points", points.len()),
    ))
}

/// `Im p_w = −(ħ/2) ∂ₓ ln P` over samples carrying at least 1% of the peak.
pub fn weak_momentum_identity(
    analysis: &Analysis,
    system: &System,
    controls: &GridControls,
) -> Result<Check> {
    let d = &analysis.distribution;
    let gradient = log_density_gradient(d.x, 0.5, d.grid, system, controls)?;
    let (_, peak) = d.peak();
    let mut worst = 0.0f64;
    for (i, s) in analysis.series.samples() {
        if d.density[i] < 0.01 * peak {
            continue;
        }
        worst = worst.max((s.p_weak.im - gradient[i]).abs() / s.p_weak.norm());
    }
    Ok(Check::at_most(
        "weak_momentum_identity",
        worst,
        1e-4,
        "max |Im p_w + (hbar/2) d_x ln P| / |p_w| where P > 1% of peak",
    ))
}

/// Spectral `Ĥψ/ψ` against `iħ ∂ₜ ln ψ`, and `∂ₓψ` against a central difference.
pub fn derivative_routes(analysis: &Analysis, system: &System) -> Result<Vec<Check>> {
    let d = &analysis.distribution;
    let sel = PostSelection { x: d.x };
    let prop = Propagator::new(&sel, &analysis.scan.momentum, system)?;
    let (t_peak, _) = d.peak();
    let sigma = d.time_variance().sqrt();
    let times: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|k| (t_peak + k * sigma).max(1.0))
        .collect();
    let mut energy = 0.0f64;
    let mut space = 0.0f64;
    let h = 0.05;
    for &t in &times {
        let v = prop.evaluate(t);
        let route = weak_energy_log_derivative(&prop, t, h)?;
        energy = energy.max((v.weak_energy() - route).norm() / v.weak_energy().norm());

        let psi_at = |dx: f64| -> Result<Amplitude> {
            let s = PostSelection::new(d.x + dx, system, 0.0)?;
            Ok(Propagator::new(&s, &analysis.scan.momentum, system)?.wavefunction(t))
        };
        let central = |k: f64| -> Result<Amplitude> { Ok((psi_at(k)? - psi_at(-k)?) / (2.0 * k)) };
        let fd = (4.0 * central(0.5 * h)? - central(h)?) / 3.0;
        space = space.max((v.d_psi - fd).norm() / v.d_psi.norm());
    }
    Ok(vec![
        Check::at_most(
            "weak_energy_routes",
            energy,
            1e-6,
            "spectral H psi / psi against i hbar d_t ln psi near the peak",
        ),
        Check::at_most(
            "spatial_derivative",
            space,
            1e-6,
            "spectral d_x psi against a central difference near the peak",
        ),
    ])
}

pub fn uncertainty(analysis: &Analysis) -> Vec<Check> {
    let s = &analysis.summary;
    let hbar = s.hbar;
    let expected = s.expected_commutator();
    vec![
        Check::at_most(
            "second_moment_bound",
            hbar * hbar / 4.0 - s.product_second_moment,
            0.0,
            format!("<t^2><|H|^2> = {:.6e} >= hbar^2/4", s.product_second_moment),
        ),
        Check::at_most(
            "stddev_bound",
            s.bound_rhs - s.product_stddev,
            0.0,
            format!("sqrt(var_t var_H) = {:.6e} >= {:.6e}", s.product_stddev, s.bound_rhs),
        ),
        Check::at_most(
            "commutator",
            (s.commutator - expected).norm() / hbar,
            1e-2,
            format!("<[H, t]> = {:.6e}{:+.6e}i", s.commutator.re, s.commutator.im),
        ),
    ]
}

/// Relative drift of the headline scalars between two resolutions.
pub fn grid_convergence(base: &Analysis, doubled: &Analysis) -> Check {
    let (a, b) = (&base.summary, &doubled.summary);
    let pairs = [
        ("mean_p", a.mean_p, b.mean_p),
        ("std_p", a.std_p(), b.std_p()),
        ("mean_h", a.mean_h, b.mean_h),
        ("var_h", a.var_h, b.var_h),
        ("mean_t", a.mean_t, b.mean_t),
        ("var_t", a.var_t, b.var_t),
        ("normalization", base.distribution.normalization, doubled.distribution.normalization),
    ];
    let (name, worst) = pairs
        .iter()
        .map(|(n, x, y)| (*n, (y - x).abs() / x.abs().max(f64::MIN_POSITIVE)))
        .fold(("", 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    Check::at_most("grid_convergence", worst, 1e-8, format!("largest relative drift in {name}"))
}

/// Spatial average of the weak momentum against `p_i` at `t = 0` and at the
/// classical arrival time. Free particle only.
pub fn spatial_average(system: &System, x: f64, controls: &GridControls) -> Result<Vec<Check>> {
    let p_i = system.state.p_incident;
    let mut real = 0.0f64;
    let mut imag = 0.0f64;
    for t in [0.0, 0.5 * system.classical_time(x)] {
        let rule = packet_rule(system, t, 10.0, 40, 20);
        let avg = spatial_average_check(t, &rule, system, controls)?;
        real = real.max((avg.re - p_i).abs() / p_i);
        imag = imag.max(avg.im.abs());
    }
    Ok(vec![
        Check::at_most("spatial_average", real, 1e-6, "|<p_w>_x - p_i| / p_i at t = 0 and t_cl/2"),
        Check::at_most("spatial_average_imag", imag, 1e-8, "|Im <p_w>_x|"),
    ])
}
