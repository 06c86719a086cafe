use embezzle_core::catalysis_cs::{
    build_tau, catalytic_fidelity, consumption_bound, copies_for_fidelity, cs_joint_state_exact,
    marginal_after_cs, nmin_over_p, nmin_search_grid, plan_teleport_catalyst, NminProblem,
};
use embezzle_core::qmat::{dmax, partial_trace_matrix, Split, Subsystem, SupportTolerance};
use embezzle_core::qstates::{random_bipartite, random_full_rank, FullRankDensity, SeededRng};
use embezzle_core::teleport::{average_fidelity_formula, entanglement_fraction};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn joint_state_within_consumption_bound(seed: u64, n in 2usize..=3) {
        let mut rng = SeededRng::new(seed);
        let rho = random_bipartite(2, &mut rng).unwrap();
        let tau = random_full_rank(4, Some(Split::square(2)), &mut rng, 1e-6).unwrap();
        let k = dmax(&rho, &tau, SupportTolerance::default()).unwrap();
        let joint = cs_joint_state_exact(&rho, &tau, n).unwrap();
        prop_assert!(joint.distance <= consumption_bound(k, n as u64).unwrap() + 1e-9);
        // The first slot of the mixture carries the convex-split marginal.
        let first = partial_trace_matrix(joint.joint.matrix(), Split::new(4, 4usize.pow(n as u32 - 1)), Subsystem::A).unwrap();
        let expected = marginal_after_cs(&rho, &tau, n as u64).unwrap();
        prop_assert!(first.max_abs_diff(expected.matrix()) < 1e-12);
    }

    #[test]
    fn plan_reaches_target(seed: u64, eps in prop::sample::select(vec![0.05, 0.1, 0.2])) {
        let mut rng = SeededRng::new(seed);
        let rho = random_bipartite(2, &mut rng).unwrap();
        let z = FullRankDensity::maximally_mixed(2).unwrap();
        let plan = plan_teleport_catalyst(&rho, &z, eps).unwrap();
        prop_assert_eq!(plan.n, copies_for_fidelity(plan.k, 2, eps));
        prop_assert!(catalytic_fidelity(&rho, &plan).unwrap() >= 1.0 - eps);
    }
}

#[test]
fn tau_interpolates() {
    let z = FullRankDensity::maximally_mixed(2).unwrap();
    let tau = build_tau(&z, 0.0).unwrap();
    assert!(tau.matrix().max_abs_diff(z.matrix()) < 1e-15);
    let tau = build_tau(&z, 0.5).unwrap();
    let f = entanglement_fraction(&tau).unwrap();
    assert!((f - (0.5 + 0.5 * 0.25)).abs() < 1e-12);
    assert!(build_tau(&z, 1.0).is_err());
}

/// Minimum of `⌈2^k(p)/(ε' − √((1−p)(1−F(ζ))))²⌉` over a uniform grid in `p`,
/// with `k` from the spectral route.
fn grid_oracle(rho: &embezzle_core::qmat::DensityMatrix, zeta: &FullRankDensity, eps: f64, steps: usize) -> f64 {
    let d = 2.0;
    let ep = (eps * (d + 1.0) / d).sqrt();
    let gap = 1.0 - entanglement_fraction(zeta).unwrap();
    let mut best = f64::INFINITY;
    for i in 0..steps {
        let p = i as f64 / steps as f64;
        let slack = ep - ((1.0 - p) * gap).sqrt();
        if slack <= 0.0 {
            continue;
        }
        let tau = build_tau(zeta, p).unwrap();
        let k = dmax(rho, &tau, SupportTolerance::default()).unwrap();
        best = best.min(k.exp2() / (slack * slack));
    }
    best
}

#[test]
fn nmin_matches_dense_grid() {
    let mut rng = SeededRng::new(21);
    for _ in 0..3 {
        let rho = random_bipartite(2, &mut rng).unwrap();
        let zeta = random_full_rank(4, Some(Split::square(2)), &mut rng, 1e-3).unwrap();
        let f = average_fidelity_formula(entanglement_fraction(&rho).unwrap(), 2).unwrap();
        let eps = 0.5 * (1.0 - f);
        let got = nmin_over_p(&rho, &zeta, eps).unwrap();
        let oracle = grid_oracle(&rho, &zeta, eps, 20_000);
        assert!(got.objective <= oracle * (1.0 + 1e-9), "{} vs {oracle}", got.objective);
        assert!(got.objective >= oracle * 0.999, "{} vs {oracle}", got.objective);
        assert_eq!(got.n_min, oracle.ceil() as u64);
        let problem = NminProblem::new(&rho, &zeta).unwrap();
        assert!(problem.constraint_holds(got.n_min, got.p_star, eps).unwrap());
    }
}

#[test]
fn search_never_worse_than_maximally_mixed() {
    let mut rng = SeededRng::new(31);
    let rho = random_bipartite(2, &mut rng).unwrap();
    let f = average_fidelity_formula(entanglement_fraction(&rho).unwrap(), 2).unwrap();
    let grid: Vec<f64> = (1..=4).map(|i| i as f64 * (1.0 - f) / 5.0).collect();
    let out = nmin_search_grid(&rho, &grid, 20, &SeededRng::new(1)).unwrap();
    let z = FullRankDensity::maximally_mixed(2).unwrap();
    for o in &out {
        assert!(o.n_min_n <= o.n_min_mixed);
        assert_eq!(o.n_min_mixed, nmin_over_p(&rho, &z, o.epsilon).unwrap().n_min);
        assert!(o.descent_ratio() >= 0.0);
    }
}
