#![allow(dead_code)]

use num_complex::Complex64;
use weaktime::steepest::{sd_distribution, SdConfig};
use weaktime::{System, TimeGrid};

/// Free Gaussian evolved in closed form: `∫exp(−Ap² + Bp + C) dp = √(π/A) exp(B²/4A + C)`.
pub fn free_gaussian(system: &System, x: f64, t: f64) -> Complex64 {
    let (hbar, m) = (system.params.hbar, system.params.mass);
    let s = &system.state;
    let i = Complex64::i();
    let a = 1.0 / (2.0 * hbar * hbar * s.gamma) + i * t / (2.0 * m * hbar);
    let b = s.p_incident / (hbar * hbar * s.gamma) + i * (x - s.x_center) / hbar;
    let c = -s.p_incident * s.p_incident / (2.0 * hbar * hbar * s.gamma);
    let norm = (std::f64::consts::PI * hbar * hbar * s.gamma).powf(-0.25)
        / (2.0 * std::f64::consts::PI * hbar).sqrt();
    norm * (std::f64::consts::PI / a).sqrt() * (b * b / (4.0 * a) + c).exp()
}

/// Variance of the Gaussian overlay distribution integrated on `grid`.
pub fn overlay_time_variance(cfg: &SdConfig, grid: &TimeGrid) -> f64 {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..grid.samples {
        let t = grid.time(i);
        let w = grid.weight(i) * sd_distribution(cfg, t);
        m0 += w;
        m1 += w * t;
        m2 += w * t * t;
    }
    m2 / m0 - (m1 / m0).powi(2)
}
