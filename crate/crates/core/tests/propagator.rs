mod common;

use common::free_gaussian;
use num_complex::Complex64;
use weaktime::controls::GridControls;
use weaktime::propagator::{
    build_momentum_grid, hamiltonian_action_at, phase_rate_bound, spatial_derivative_at,
    wavefunction_at, MomentumGrid, PostSelection,
};
use weaktime::{Error, System};

fn grid_for(system: &System, x_extent: f64, t_max: f64) -> MomentumGrid {
    let g = build_momentum_grid(&system.state, &system.params, &GridControls::default()).unwrap();
    let rate = phase_rate_bound(system, x_extent, t_max, g.p_hi);
    g.refined_for_phase_rate(rate).unwrap()
}

#[test]
fn free_propagation_matches_closed_form() {
    let free = System::reference().free();
    let grid = grid_for(&free, 400.0, 1200.0);
    let mut checked = 0;
    for it in 0..12 {
        let t = 100.0 * it as f64;
        let centre = free.state.x_center + free.state.p_incident * t / free.params.mass;
        let peak = free_gaussian(&free, centre, t).norm();
        for ix in 0..11 {
            let x = centre - 100.0 + 20.0 * ix as f64;
            let sel = PostSelection::new(x, &free, 0.0).unwrap();
            let got = wavefunction_at(&sel, t, &grid, &free).unwrap();
            let want = free_gaussian(&free, x, t);
            assert!((got - want).norm() <= 1e-8 * peak, "x={x} t={t}: {got} vs {want}");
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn hamiltonian_and_derivative_match_finite_differences() {
    let system = System::reference();
    let grid = grid_for(&system, 110.0, 1000.0);
    let h = 0.02;
    for (x, t) in [(100.0, 380.0), (100.0, 420.0), (-60.0, 150.0), (40.0, 300.0)] {
        let psi = |x: f64, t: f64| {
            let sel = PostSelection::new(x, &system, 1.0).unwrap();
            wavefunction_at(&sel, t, &grid, &system).unwrap()
        };
        let sel = PostSelection::new(x, &system, 1.0).unwrap();
        let d = spatial_derivative_at(&sel, t, &grid, &system).unwrap();
        let fd = (-psi(x + 2.0 * h, t) + 8.0 * psi(x + h, t) - 8.0 * psi(x - h, t)
            + psi(x - 2.0 * h, t))
            / (12.0 * h);
        assert!((d - fd).norm() < 1e-7 * d.norm(), "d_x at x={x}, t={t}");

        // Outside the barrier Ĥψ = −(ħ²/2M)ψ''.
        let hpsi = hamiltonian_action_at(&sel, t, &grid, &system).unwrap();
        let second = (-psi(x + 2.0 * h, t) + 16.0 * psi(x + h, t) - 30.0 * psi(x, t)
            + 16.0 * psi(x - h, t)
            - psi(x - 2.0 * h, t))
            / (12.0 * h * h);
        let kinetic = -second / (2.0 * system.params.mass);
        assert!((hpsi - kinetic).norm() < 1e-5 * hpsi.norm(), "H at x={x}, t={t}");

        // And iħ∂ₜψ = Ĥψ.
        let dt = 0.1;
        let ddt = (-psi(x, t + 2.0 * dt) + 8.0 * psi(x, t + dt) - 8.0 * psi(x, t - dt)
            + psi(x, t - 2.0 * dt))
            / (12.0 * dt);
        assert!((Complex64::i() * ddt - hpsi).norm() < 1e-7 * hpsi.norm(), "i d_t at x={x}, t={t}");
    }
}

#[test]
fn doubling_nodes_per_panel_changes_nothing() {
    let system = System::reference();
    let grid = grid_for(&system, 100.0, 1300.0);
    let fine = grid.with_nodes_per_panel(2 * grid.nodes_per_panel());
    let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
    for t in [200.0, 350.0, 400.0, 450.0, 700.0, 1200.0] {
        let a = wavefunction_at(&sel, t, &grid, &system).unwrap();
        let b = wavefunction_at(&sel, t, &fine, &system).unwrap();
        let scale = wavefunction_at(&sel, 400.0, &grid, &system).unwrap().norm();
        assert!((a - b).norm() < 1e-10 * scale, "t={t}");
    }
}

#[test]
fn transmitted_density_peaks_near_classical_arrival() {
    let system = System::reference();
    let grid = grid_for(&system, 100.0, 800.0);
    let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
    let (t_peak, _) = (0..=800)
        .map(|i| i as f64)
        .map(|t| (t, wavefunction_at(&sel, t, &grid, &system).unwrap().norm_sqr()))
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    // Faster components tunnel more easily, so the peak comes a little early.
    assert!(t_peak < 400.0 && t_peak > 0.96 * 400.0, "{t_peak}");
}

#[test]
fn negative_time_is_rejected() {
    let system = System::reference();
    let grid = grid_for(&system, 100.0, 10.0);
    let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
    assert!(matches!(wavefunction_at(&sel, -1.0, &grid, &system), Err(Error::Domain(_))));
    assert!(matches!(hamiltonian_action_at(&sel, f64::NAN, &grid, &system), Err(Error::Domain(_))));
    assert!(matches!(PostSelection::new(0.5, &system, 1.0), Err(Error::Domain(_))));
}

#[test]
fn global_phase_drops_out_of_ratios() {
    let system = System::reference();
    let mut rotated = system;
    rotated.state = rotated.state.with_global_phase(1.234);
    let grid = grid_for(&system, 100.0, 500.0);
    let sel = PostSelection::new(100.0, &system, 1.0).unwrap();
    let a = wavefunction_at(&sel, 400.0, &grid, &system).unwrap();
    let b = wavefunction_at(&sel, 400.0, &grid, &rotated).unwrap();
    assert!((b / a - Complex64::from_polar(1.0, 1.234)).norm() < 1e-13);
    let da = spatial_derivative_at(&sel, 400.0, &grid, &system).unwrap() / a;
    let db = spatial_derivative_at(&sel, 400.0, &grid, &rotated).unwrap() / b;
    assert!((da - db).norm() < 1e-13 * da.norm());
}
