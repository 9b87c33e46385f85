mod common;

use std::sync::OnceLock;

use common::overlay_time_variance;
use weaktime::controls::GridControls;
use weaktime::propagator::PostSelection;
use weaktime::steepest::{sd_distribution, sd_norm, SdConfig};
use weaktime::tptd::{
    arrival_time_momentum, build_distribution, mean_arrival_time, scan, scan_on, time_moment,
};
use weaktime::{Error, System, TptDistribution};

fn reference() -> &'static TptDistribution {
    static DIST: OnceLock<TptDistribution> = OnceLock::new();
    DIST.get_or_init(|| {
        let system = System::reference();
        let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
        build_distribution(&sel, &system, &GridControls::default()).unwrap()
    })
}

#[test]
fn density_is_normalized_and_non_negative() {
    let d = reference();
    assert!(d.density.iter().all(|&p| p >= 0.0));
    assert!((time_moment(d, 0).unwrap() - 1.0).abs() < 1e-6);
    assert!(d.tail_mass_estimate < GridControls::default().eps_tail);
    assert!(d.at_zero() < 1e-12);
}

#[test]
fn normalization_matches_transmission_probability() {
    let system = System::reference();
    let expected = sd_norm(&SdConfig::new(&system, 100.0)).unwrap();
    let n = reference().normalization;
    assert!((n - expected).abs() < 0.02 * expected, "N = {n}, M|T|^2/p = {expected}");
}

#[test]
fn normalization_is_independent_of_position() {
    let system = System::reference();
    let sel = PostSelection::new(150.0, &system, 1.0).unwrap();
    let far = build_distribution(&sel, &system, &GridControls::default()).unwrap();
    let near = reference().normalization;
    assert!((far.normalization - near).abs() < 0.01 * near);
}

#[test]
fn moments_follow_classical_transport() {
    let d = reference();
    let mean = d.mean_time();
    assert!((mean - 400.0).abs() < 0.02 * 400.0, "{mean}");
    assert!(matches!(time_moment(d, 3), Err(Error::Unsupported(_))));

    // The time variance against the numerically integrated Gaussian overlay.
    let cfg = SdConfig::new(&System::reference(), 100.0);
    let sd_var = overlay_time_variance(&cfg, &d.grid);
    assert!((d.time_variance() - sd_var).abs() < 0.10 * sd_var, "{} vs {sd_var}", d.time_variance());
}

#[test]
fn mean_time_increases_downstream() {
    let system = System::reference();
    let controls = GridControls::default();
    let at = |x: f64| {
        mean_arrival_time(&PostSelection::new(x, &system, 1.0).unwrap(), &system, &controls).unwrap()
    };
    let (a, b, c) = (at(100.0), at(110.0), at(120.0));
    assert!(b > a && c > b);
    // Equal steps in x give nearly equal steps in t.
    assert!(((c - b) - (b - a)).abs() < 1e-3 * (b - a));
    let slope_momentum = 0.5 * 10.0 / (b - a);
    assert!((slope_momentum - 0.2502).abs() < 0.001, "{slope_momentum}");
}

#[test]
fn tail_decays_at_least_as_fast_as_cubic() {
    assert!(reference().tail_slope <= -2.5, "{}", reference().tail_slope);
}

#[test]
fn halving_the_time_step_leaves_the_mean_unchanged() {
    let system = System::reference();
    let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
    let base = scan(&sel, &system, &GridControls::default()).unwrap();
    let fine = scan_on(&sel, base.grid.refined(), &base.momentum, &system).unwrap();
    let a = TptDistribution::from_scan(&base).unwrap().mean_time();
    let b = TptDistribution::from_scan(&fine).unwrap().mean_time();
    assert!((a - b).abs() < 1e-4 * a);
}

#[test]
fn exact_peak_precedes_gaussian_peak() {
    let d = reference();
    let cfg = SdConfig::new(&System::reference(), 100.0);
    let (t_exact, _) = d.peak();
    let t_sd = d
        .grid
        .times()
        .map(|t| (t, sd_distribution(&cfg, t)))
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    assert!(t_exact < t_sd, "exact {t_exact}, gaussian {t_sd}");
}

/// `⟨1/p⟩ / ⟨1/p²⟩` over `|φ(p)|²` restricted to `p > 0`, by Simpson's rule.
fn flux_weighted_momentum(system: &System) -> f64 {
    let s = &system.state;
    let sigma = s.gamma.sqrt() * system.params.hbar;
    let (lo, hi) = ((s.p_incident - 12.0 * sigma).max(1e-9), s.p_incident + 12.0 * sigma);
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let (mut inv1, mut inv2) = (0.0, 0.0);
    for i in 0..=n {
        let p = lo + h * i as f64;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let rho = (-(p - s.p_incident).powi(2) / (sigma * sigma)).exp();
        inv1 += w * rho / p;
        inv2 += w * rho / (p * p);
    }
    inv1 / inv2
}

#[test]
fn free_arrival_momentum_is_flux_weighted_average() {
    let free = System::reference().free();
    let p = arrival_time_momentum(100.0, 0.5, &free, &GridControls::default()).unwrap();
    let oracle = flux_weighted_momentum(&free);
    assert!((p.momentum - oracle).abs() < 1e-5 * oracle, "{p:?} vs {oracle}");
    // Momentum dispersion pulls the estimate below p_i by about 2σ_p²/p_i².
    let sigma2 = free.state.gamma / 2.0;
    let second_order = 0.25 * (1.0 - 2.0 * sigma2 / 0.0625);
    assert!((p.momentum - second_order).abs() < 1e-3 * 0.25);
}

#[test]
fn arrival_momentum_needs_resolvable_separation() {
    let system = System::reference();
    let controls = GridControls::default();
    let err = arrival_time_momentum(100.0, 1e-4, &system, &controls).unwrap_err();
    assert!(matches!(err, Error::Resolution(_)), "{err}");
    assert!(matches!(
        arrival_time_momentum(100.0, -1.0, &system, &controls),
        Err(Error::Domain(_))
    ));
}
