use embezzle_core::qmat::{
    dmax, dmax_positive_definite, partial_trace, purified_distance, tensor_product, uhlmann_fidelity,
    DensityMatrix, Split, Subsystem, SupportTolerance,
};
use embezzle_core::qstates::{random_density, random_full_rank, random_pure, SeededRng};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn bipartite(a: usize, b: usize, rng: &mut SeededRng) -> DensityMatrix {
    random_density(a * b, rng).unwrap().with_split(a, b).unwrap()
}

/// Smallest `λ` with `λσ − ρ ⪰ 0`, by bisection on `log2 λ`.
fn dmax_bisection(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let psd = |log_lambda: f64| {
        let m = &sigma.matrix().scale(log_lambda.exp2()) - rho.matrix();
        m.eigvalsh()[0] >= 0.0
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while !psd(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psd(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn purified_distance_axioms(seed: u64, dim in 2usize..=4) {
        let mut rng = SeededRng::new(seed);
        let r = random_density(dim, &mut rng).unwrap();
        let s = random_density(dim, &mut rng).unwrap();
        let t = random_density(dim, &mut rng).unwrap();
        let rs = purified_distance(&r, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&rs));
        prop_assert!(purified_distance(&r, &r).unwrap() < 1e-6);
        prop_assert!((rs - purified_distance(&s, &r).unwrap()).abs() < TOL);
        let rt = purified_distance(&r, &t).unwrap();
        let ts = purified_distance(&t, &s).unwrap();
        prop_assert!(rs <= rt + ts + TOL);
    }

    #[test]
    fn data_processing_and_tensor_invariance(seed: u64, a in 2usize..=3, b in 2usize..=3) {
        let mut rng = SeededRng::new(seed);
        let r = bipartite(a, b, &mut rng);
        let s = bipartite(a, b, &mut rng);
        let w = random_density(2, &mut rng).unwrap();
        let full = purified_distance(&r, &s).unwrap();
        for keep in [Subsystem::A, Subsystem::B] {
            let reduced = purified_distance(&partial_trace(&r, keep).unwrap(), &partial_trace(&s, keep).unwrap()).unwrap();
            prop_assert!(reduced <= full + TOL);
        }
        let ext = purified_distance(&tensor_product(&r, &w).unwrap(), &tensor_product(&s, &w).unwrap()).unwrap();
        prop_assert!((ext - full).abs() < 1e-7);
    }

    #[test]
    fn fidelity_multiplicative(seed: u64) {
        let mut rng = SeededRng::new(seed);
        let (r1, s1) = (random_density(2, &mut rng).unwrap(), random_density(2, &mut rng).unwrap());
        let (r2, s2) = (random_density(3, &mut rng).unwrap(), random_density(3, &mut rng).unwrap());
        let joint = uhlmann_fidelity(&tensor_product(&r1, &r2).unwrap(), &tensor_product(&s1, &s2).unwrap()).unwrap();
        let parts = uhlmann_fidelity(&r1, &s1).unwrap() * uhlmann_fidelity(&r2, &s2).unwrap();
        prop_assert!((joint - parts).abs() < 1e-8);
    }

    #[test]
    fn pure_state_fidelity_is_expectation(seed: u64, dim in 2usize..=6) {
        let mut rng = SeededRng::new(seed);
        let psi = random_pure(dim, None, &mut rng).unwrap();
        let s = random_density(dim, &mut rng).unwrap();
        let direct = s.expectation(psi.amplitudes());
        prop_assert!((uhlmann_fidelity(&psi.density(), &s).unwrap() - direct).abs() < 1e-7);
    }
}

#[test]
fn dmax_matches_bisection() {
    let mut rng = SeededRng::new(99);
    for i in 0..100 {
        let dim = 2 + i % 3;
        let rho = random_density(dim, &mut rng).unwrap();
        let sigma = random_full_rank(dim, None, &mut rng, 1e-3).unwrap();
        let oracle = dmax_bisection(&rho, &sigma);
        let spectral = dmax(&rho, &sigma, SupportTolerance::default()).unwrap();
        let chol = dmax_positive_definite(&rho, &sigma).unwrap();
        assert!((spectral - oracle).abs() < 1e-6, "{spectral} vs {oracle}");
        assert!((chol - oracle).abs() < 1e-6, "{chol} vs {oracle}");
    }
}

#[test]
fn dmax_with_singular_sigma() {
    // σ supported on the first two levels, ρ inside that support.
    let sigma = DensityMatrix::diagonal(&[0.25, 0.75, 0.0], None).unwrap();
    let rho = DensityMatrix::diagonal(&[0.5, 0.5, 0.0], None).unwrap();
    let v = dmax(&rho, &sigma, SupportTolerance::default()).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
    let outside = DensityMatrix::diagonal(&[0.5, 0.0, 0.5], None).unwrap();
    assert!(dmax(&outside, &sigma, SupportTolerance::default()).is_err());
}

#[test]
fn partial_trace_of_product() {
    let mut rng = SeededRng::new(5);
    let a = random_density(2, &mut rng).unwrap();
    let b = random_density(3, &mut rng).unwrap();
    let ab = tensor_product(&a, &b).unwrap();
    assert_eq!(ab.split(), Some(Split::new(2, 3)));
    let back = partial_trace(&ab, Subsystem::A).unwrap();
    assert!(back.matrix().max_abs_diff(a.matrix()) < 1e-12);
    let back = partial_trace(&ab, Subsystem::B).unwrap();
    assert!(back.matrix().max_abs_diff(b.matrix()) < 1e-12);
}
