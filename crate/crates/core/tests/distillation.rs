use embezzle_core::catalysis_cs::candidate_pool;
use embezzle_core::catalysis_emb::{lemma2_bound, schmidt_rank_for_deficit};
use embezzle_core::distill::{distill_cs_plan, distill_cs_search, distill_emb_plan, DistillKind};
use embezzle_core::qstates::{random_bipartite, FullRankDensity, SeededRng};

#[test]
fn cs_plans_reach_target_on_random_states() {
    let mut rng = SeededRng::new(41);
    for d in [2, 3] {
        let z = FullRankDensity::maximally_mixed(d).unwrap();
        for _ in 0..10 {
            let rho = random_bipartite(d, &mut rng).unwrap();
            for eps in [0.1, 0.2, 0.3] {
                let plan = distill_cs_plan(&rho, &z, eps).unwrap();
                assert_eq!(plan.kind, DistillKind::ConvexSplit);
                assert!(plan.exact_fidelity.unwrap() >= 1.0 - eps);
                assert!(plan.predicted_consumption <= eps.sqrt() / 2.0 + 1e-12);
                assert!(plan.predicted_fidelity_lb >= 1.0 - eps - 1e-12);
            }
        }
    }
}

#[test]
fn emb_plans_meet_bound() {
    for d in [2, 3, 4] {
        let mut last = u64::MAX;
        for i in 1..=9 {
            let eps = i as f64 / 10.0;
            let plan = distill_emb_plan(d, eps).unwrap();
            assert!(plan.count <= last);
            last = plan.count;
            assert!(lemma2_bound(d, plan.count as usize).unwrap() >= 1.0 - eps - 1e-12);
            assert!(plan.predicted_consumption > 0.0 && plan.predicted_consumption < 1.5);
        }
    }
    // At a full deficit the exponent is one and the rank is d.
    assert_eq!(schmidt_rank_for_deficit(3, 1.0).unwrap(), 3);
    assert!(distill_emb_plan(3, 1.0).is_err());
}

#[test]
fn search_improves_on_maximally_mixed() {
    let mut rng = SeededRng::new(43);
    let rho = random_bipartite(2, &mut rng).unwrap();
    let pool = candidate_pool(2, 100, &SeededRng::new(44)).unwrap();
    for eps in [0.1, 0.2, 0.3] {
        let (_, best) = distill_cs_search(&rho, &pool, eps).unwrap();
        let mixed = distill_cs_plan(&rho, &pool[0], eps).unwrap();
        assert!(best.count <= mixed.count);
        assert!(best.exact_fidelity.unwrap() >= 1.0 - eps);
    }
}
