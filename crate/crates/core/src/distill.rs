//! Single-shot distillation of `φ⁺` with a catalyst, in the convex-split and
//! embezzling-state variants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalysis_cs::{build_tau, consumption_bound, marginal_after_cs};
use crate::catalysis_emb::{
    catalyst_residual, consumption_bound as emb_consumption_bound, lemma2_bound,
    schmidt_rank_for_deficit, SIDE_DIM_CAP,
};
use crate::error::{domain, shape, Result};
use crate::qmat::{dmax_positive_definite, DensityMatrix};
use crate::qstates::FullRankDensity;
use crate::teleport::entanglement_fraction;
use crate::{ceil_count, is_impractical};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistillKind {
    #[serde(rename = "CS")]
    ConvexSplit,
    #[serde(rename = "E")]
    Embezzling,
}

/// `count` is the copy number `n` for convex split and the Schmidt rank `M`
/// for embezzling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillPlan {
    pub kind: DistillKind,
    pub epsilon: f64,
    pub p: Option<f64>,
    pub count: u64,
    pub k: Option<f64>,
    /// Lower bound on `F_U(output, φ⁺)`.
    pub predicted_fidelity_lb: f64,
    pub predicted_consumption: f64,
    /// `F_U(ρ/n + (n−1)τ/n, φ⁺)`, convex split only.
    pub exact_fidelity: Option<f64>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok(())
}

fn local_dim(rho: &DensityMatrix) -> Result<usize> {
    rho.split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| shape("state must carry a square d x d split"))
}

/// Smallest `p` with `(1−p)(1−F(ζ)) ≤ ε/4`, i.e. `P(τ, φ⁺) ≤ √ε/2`.
pub fn distill_min_p(zeta: &FullRankDensity, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let gap = 1.0 - entanglement_fraction(zeta)?;
    if gap <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - epsilon / (4.0 * gap)).max(0.0))
}

/// `⌈2^(k+2)/ε⌉`, saturating like the other copy counts.
pub fn distill_copies(k: f64, epsilon: f64) -> u64 {
    ceil_count((k + 2.0).exp2() / epsilon)
}

pub fn distill_cs_plan(rho: &DensityMatrix, zeta: &FullRankDensity, epsilon: f64) -> Result<DistillPlan> {
    check_epsilon(epsilon)?;
    if local_dim(rho)? != local_dim(zeta)? {
        return Err(shape("rho and zeta have different local dimensions"));
    }
    let p = distill_min_p(zeta, epsilon)?;
    let tau = build_tau(zeta, p)?;
    let k = dmax_positive_definite(rho, &tau)?;
    let n = distill_copies(k, epsilon);
    let exact = entanglement_fraction(&marginal_after_cs(rho, &tau, n)?)?;
    Ok(DistillPlan {
        kind: DistillKind::ConvexSplit,
        epsilon,
        p: Some(p),
        count: n,
        k: Some(k),
        predicted_fidelity_lb: 1.0 - epsilon,
        predicted_consumption: consumption_bound(k, n)?,
        exact_fidelity: Some(exact),
    })
}

/// Embezzling plan at `M = ⌈d^(1/(1−√(1−ε)))⌉`. Consumption is computed
/// exactly while `d·M` fits the side-dimension cap and falls back to
/// `√(2 log_M d)` beyond it. Ranks past the count cap are rejected.
pub fn distill_emb_plan(d: usize, epsilon: f64) -> Result<DistillPlan> {
    check_epsilon(epsilon)?;
    if d < 2 {
        return Err(domain(format!("need d >= 2, got {d}")));
    }
    let m = schmidt_rank_for_deficit(d, epsilon)?;
    if is_impractical(m) {
        return Err(domain(format!("Schmidt rank for epsilon = {epsilon} is impractically large")));
    }
    let mu = m as usize;
    let lb = lemma2_bound(d, mu)?;
    let consumption = if d.saturating_mul(mu) <= SIDE_DIM_CAP {
        catalyst_residual(d, mu)?.p_exact
    } else {
        emb_consumption_bound(d, mu)?
    };
    Ok(DistillPlan {
        kind: DistillKind::Embezzling,
        epsilon,
        p: None,
        count: m,
        k: None,
        predicted_fidelity_lb: lb,
        predicted_consumption: consumption,
        exact_fidelity: None,
    })
}

/// Convex-split plan with the fewest copies over `candidates`; ties go to the
/// lowest index.
pub fn distill_cs_search(
    rho: &DensityMatrix,
    candidates: &[FullRankDensity],
    epsilon: f64,
) -> Result<(usize, DistillPlan)> {
    if candidates.is_empty() {
        return Err(domain("no candidate states"));
    }
    let plans: Vec<DistillPlan> = candidates
        .par_iter()
        .map(|z| distill_cs_plan(rho, z, epsilon))
        .collect::<Result<_>>()?;
    let (idx, _) = plans
        .iter()
        .enumerate()
        .min_by_key(|(i, p)| (p.count, *i))
        .expect("nonempty");
    Ok((idx, plans[idx].clone()))
}
