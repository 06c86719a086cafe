use embezzle_core::qmat::{partial_trace_matrix, ComplexMatrix, DensityMatrix, Split, Subsystem, C64};
use embezzle_core::qstates::{max_entangled_density, random_bipartite, random_density, random_pure, SeededRng};
use embezzle_core::teleport::{
    average_fidelity, average_fidelity_mc, bell_basis, entanglement_fraction, teleport_channel,
};

/// Bob's state by brute force on the full `R⊗A⊗B` space.
fn simulate(resource: &DensityMatrix, psi: &[C64]) -> ComplexMatrix {
    let d = psi.len();
    let table = bell_basis(d).unwrap();
    let input = ComplexMatrix::outer(psi).kron(resource.matrix());
    let id_b = ComplexMatrix::identity(d);
    let id_ra = ComplexMatrix::identity(d * d);
    let mut out = ComplexMatrix::zeros(d, d);
    for k in 0..d * d {
        let proj = table.projector(k).kron(&id_b);
        let corr = id_ra.kron(table.correction(k));
        let after = &(&corr * &(&(&proj * &input) * &proj)) * &corr.adjoint();
        let bob = partial_trace_matrix(&after, Split::new(d * d, d), Subsystem::B).unwrap();
        out = &out + &bob;
    }
    out
}

#[test]
fn channel_matches_full_simulation() {
    let mut rng = SeededRng::new(3);
    for d in [2, 3] {
        for _ in 0..10 {
            let rho = random_bipartite(d, &mut rng).unwrap();
            let psi = random_pure(d, None, &mut rng).unwrap();
            let fast = teleport_channel(&rho, &psi).unwrap();
            let slow = simulate(&rho, psi.amplitudes());
            assert!(fast.matrix().max_abs_diff(&slow) < 1e-12);
        }
    }
}

#[test]
fn maximally_entangled_resource_is_identity_channel() {
    let mut rng = SeededRng::new(4);
    for d in 2..=4 {
        let phi = max_entangled_density(d).unwrap();
        assert!((average_fidelity(&phi).unwrap() - 1.0).abs() < 1e-12);
        let psi = random_pure(d, None, &mut rng).unwrap();
        let out = teleport_channel(&phi, &psi).unwrap();
        assert!(out.matrix().max_abs_diff(psi.density().matrix()) < 1e-12);
    }
}

#[test]
fn product_resource_gives_classical_fidelity() {
    for d in 2..=4 {
        let mixed = DensityMatrix::maximally_mixed(d * d, Some(Split::square(d))).unwrap();
        assert!((entanglement_fraction(&mixed).unwrap() - 1.0 / (d * d) as f64).abs() < 1e-12);
        assert!((average_fidelity(&mixed).unwrap() - 1.0 / d as f64).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_tracks_formula() {
    let rng = SeededRng::new(6);
    let mut draw = SeededRng::new(7);
    for d in [2, 3] {
        let rho = random_bipartite(d, &mut draw).unwrap();
        let est = average_fidelity_mc(&rho, 4000, &rng).unwrap();
        let exact = average_fidelity(&rho).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{} vs {exact}", est.mean);
        let again = average_fidelity_mc(&rho, 4000, &rng).unwrap();
        assert_eq!(est, again);
    }
    assert!(average_fidelity_mc(&max_entangled_density(2).unwrap(), 10, &rng).is_err());
}

#[test]
fn haar_moments() {
    // E|ψ⟩⟨ψ| = I/d and E|ψ_0|⁴ = 2/(d(d+1)).
    let mut rng = SeededRng::new(8);
    let d = 3;
    let n = 20000;
    let mut mean = ComplexMatrix::zeros(d, d);
    let mut fourth = 0.0;
    for _ in 0..n {
        let psi = random_pure(d, None, &mut rng).unwrap();
        mean = &mean + psi.density().matrix();
        fourth += psi.amplitudes()[0].norm_sqr().powi(2);
    }
    let mean = mean.scale(1.0 / n as f64);
    assert!(mean.max_abs_diff(&ComplexMatrix::identity(d).scale(1.0 / d as f64)) < 0.01);
    assert!((fourth / n as f64 - 2.0 / 12.0).abs() < 0.005);
}

#[test]
fn ginibre_mean_is_maximally_mixed() {
    let mut rng = SeededRng::new(9);
    let d = 4;
    let n = 5000;
    let mut mean = ComplexMatrix::zeros(d, d);
    for _ in 0..n {
        mean = &mean + random_density(d, &mut rng).unwrap().matrix();
    }
    let mean = mean.scale(1.0 / n as f64);
    assert!(mean.max_abs_diff(&ComplexMatrix::identity(d).scale(0.25)) < 0.01);
}
