use embezzle_core::catalysis_emb::{
    catalyst_residual, closed_form_distance, consumption_bound, embezzle_protocol_for, lemma2_bound,
    min_rank_for_consumption, omega_state, rearrangement_perm, schmidt_rank_for, schmidt_rank_for_deficit,
    target_ket, EmbezzlingState,
};
use embezzle_core::qmat::{partial_trace, purified_distance, DensityMatrix, Subsystem, C64};
use embezzle_core::IMPRACTICAL_COUNT;

#[test]
fn rank_formula_matches_high_precision() {
    // Reference ceilings from 60-digit arithmetic on the same binary inputs.
    let table: [(usize, f64, u64); 8] = [
        (2, 0.19, 1024),
        (2, 0.3, 70),
        (3, 0.25, 3642),
        (2, 0.5, 11),
        (3, 0.1, 1_984_185_183),
        (4, 0.6, 44),
        (2, 0.05, 774_024_721_852),
        (3, 0.4, 131),
    ];
    for (d, x, want) in table {
        assert_eq!(schmidt_rank_for_deficit(d, x).unwrap(), want, "d = {d}, x = {x}");
    }
    assert_eq!(schmidt_rank_for_deficit(2, 1.0).unwrap(), 2);
    assert_eq!(schmidt_rank_for_deficit(2, 0.01).unwrap(), IMPRACTICAL_COUNT);
    assert!(schmidt_rank_for(2, 0.7).is_err());
    assert_eq!(min_rank_for_consumption(2, 1.0).unwrap(), 4);
    assert_eq!(min_rank_for_consumption(2, 0.8).unwrap(), 9);
    assert_eq!(min_rank_for_consumption(3, 1.2).unwrap(), 5);
}

#[test]
fn fidelity_has_closed_form_and_beats_bound() {
    for d in [2usize, 3] {
        for e in 1..=10 {
            let m = 1usize << e;
            if m < d {
                continue;
            }
            let out = embezzle_protocol_for(d, m).unwrap();
            let tau = EmbezzlingState::new(m).unwrap();
            let a = tau.amplitudes();
            // |00 jj⟩ lands on |kk ll⟩ with k = j mod d, l = ⌊j/d⌋.
            let overlap: f64 = (0..m).map(|j| a[j] * a[j / d]).sum::<f64>() / (d as f64).sqrt();
            assert!((out.fidelity - overlap * overlap).abs() < 1e-12);
            assert!(out.fidelity >= lemma2_bound(d, m).unwrap());
        }
    }
}

#[test]
fn permutation_identity() {
    for (d, m) in [(2, 4), (2, 8), (3, 9), (2, 64), (3, 27)] {
        let perm = rearrangement_perm(d, m).unwrap();
        assert!(perm.is_bijection());
        let omega = omega_state(d, m).unwrap();
        let tau = EmbezzlingState::new(m).unwrap();
        let mapped = perm.apply_to(&omega.ket());
        assert!(mapped.max_abs_diff(&target_ket(d, &tau)) < 1e-12, "d = {d}, M = {m}");
    }
}

#[test]
fn residual_matches_dense_partial_trace() {
    for (d, m) in [(2, 4), (2, 5), (3, 4)] {
        let out = embezzle_protocol_for(d, m).unwrap();
        let joint = out.joint_density().unwrap().with_split(d * d, m * m).unwrap();
        let xi = partial_trace(&joint, Subsystem::B).unwrap();
        let amps: Vec<C64> = (0..m * m)
            .map(|idx| {
                let (c, c2) = (idx / m, idx % m);
                if c == c2 {
                    C64::new(EmbezzlingState::new(m).unwrap().amplitudes()[c], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        let tau = DensityMatrix::from_ket(&amps, None).unwrap();
        let dense = purified_distance(&xi, &tau).unwrap();
        let res = catalyst_residual(d, m).unwrap();
        assert!((res.p_exact - dense).abs() < 1e-7, "{} vs {dense}", res.p_exact);
        assert!((res.trace() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn residual_sweep() {
    for d in [2, 3] {
        for m in 4..=64 {
            if m < d {
                continue;
            }
            let res = catalyst_residual(d, m).unwrap();
            assert!((res.p_exact - closed_form_distance(d, m).unwrap()).abs() < 1e-9, "d={d} M={m}");
            assert!(res.p_exact <= consumption_bound(d, m).unwrap());
        }
    }
}
