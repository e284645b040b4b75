use std::sync::Arc;

use heisenrep::bundle::FlatConnection;
use heisenrep::hilbert::{apply_hamiltonian, inner_product, probability_current, HamiltonianParams, RadialGrid, RadialMode};
use heisenrep::models::{
    alpha_abs, free_wavefunction, oscillator_energy, oscillator_grid, oscillator_wavefunction, spectral_flow, LevelWindow,
    ScatteringLabel,
};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn half_flux_levels_pair_up() {
    let params = HamiltonianParams::default();
    let row = &spectral_flow(&[0.5], &params, &LevelWindow::symmetric(8, 15)).unwrap()[0];
    let interior = row.energies_below(row.complete_below);
    assert!(interior.len() > 20);
    for pair in interior.chunks(2) {
        assert_eq!(pair.len(), 2);
        assert!((pair[0] - pair[1]).abs() < 1e-12, "{pair:?}");
    }
    // ℓ and −ℓ−1 share |ℓ + ½|
    for l in &row.levels {
        let partner = row.levels.iter().find(|m| m.n_r == l.n_r && m.ell == -l.ell - 1);
        if let Some(m) = partner {
            assert_eq!(m.energy, l.energy);
        }
    }
}

#[test]
fn free_mode_solves_the_radial_equation() {
    for (mu, nu, lambda, ell) in [(0.0, 0.0, 0.0, 0i64), (0.0, 0.0, 0.3, 1), (0.2, 0.1, 0.4, -2)] {
        let params = HamiltonianParams::free(mu, nu);
        let grid = Arc::new(RadialGrid::log(1e-3, 30.0, 3000).unwrap());
        let label = ScatteringLabel { energy: 1.3, ell };
        let psi = free_wavefunction(&label, &params, lambda, grid.clone()).unwrap();
        let conn = FlatConnection::new(lambda);
        let h = apply_hamiltonian(&params, &conn, &psi).unwrap();
        let n = grid.len();
        let worst = (20..n - 20)
            .map(|k| (h.samples()[k] - label.energy * psi.samples()[k]).norm())
            .fold(0.0f64, f64::max);
        let size = psi.sup_norm();
        assert!(worst < 1e-6 * size * label.energy, "ell={ell}: {worst:e}");
    }
}

#[test]
fn excluded_irregular_mode_has_divergent_current() {
    // r^{−α} is the small-r behaviour of the Bessel-Y solution that the boundary conditions exclude
    let (lambda, ell) = (0.3, 0);
    let alpha = alpha_abs(ell, lambda, 0.0);
    let grid = Arc::new(RadialGrid::log(1e-6, 5.0, 1500).unwrap());
    let params = HamiltonianParams::free(0.0, 0.0);
    let bad = RadialMode::from_fn(ell, grid.clone(), |r| Complex64::new(r.powf(-alpha) * (-r).exp(), 0.0)).unwrap();
    let good = RadialMode::from_fn(ell, grid.clone(), |r| Complex64::new(r.powf(alpha) * (-r).exp(), 0.0)).unwrap();
    let conn = FlatConnection::new(lambda);
    let jb = probability_current(&bad, &params, &conn).unwrap().angular;
    let jg = probability_current(&good, &params, &conn).unwrap().angular;
    let at_one = grid.nodes().iter().position(|&r| r >= 1.0).unwrap();
    // |f|² ~ r^{∓2α} = 10^{±3.6} at r = 1e-6
    assert!(jb.samples()[0].re > 1e3 * jb.samples()[at_one].re);
    assert!(jg.samples()[0].re < 1e-2 * jg.samples()[at_one].re);
}

#[test]
fn modes_of_different_ell_are_orthogonal() {
    let params = HamiltonianParams::oscillator(1.0, 0.1, 0.0);
    let grid = Arc::new(oscillator_grid(&params, 2, 3.0, 2000).unwrap());
    let a = oscillator_wavefunction(1, 0, &params, 0.2, grid.clone()).unwrap();
    let b = oscillator_wavefunction(1, 1, &params, 0.2, grid).unwrap();
    assert_eq!(inner_product(&a, &b).unwrap(), Complex64::new(0.0, 0.0));
}

proptest! {
    #[test]
    fn alpha_is_invariant_under_flux_relabelling(ell in -30i64..30, lambda in -3.0f64..3.0, mu in -1.0f64..1.0) {
        prop_assert!((alpha_abs(ell, lambda + 1.0, mu) - alpha_abs(ell + 1, lambda, mu)).abs() <= 1e-14 * 40.0);
        prop_assert!(alpha_abs(ell, lambda, mu) >= (2.0 * mu).abs());
    }

    #[test]
    fn energy_grows_with_radial_quantum_number(n in 0usize..50, ell in -20i64..20, lambda in -2.0f64..2.0, omega in 0.1f64..5.0) {
        let p = HamiltonianParams::oscillator(omega, 0.1, 0.2);
        let gap = oscillator_energy(n + 1, ell, &p, lambda).unwrap() - oscillator_energy(n, ell, &p, lambda).unwrap();
        prop_assert!((gap - 2.0 * omega).abs() <= 1e-12 * omega * (n as f64 + 30.0));
    }
}
