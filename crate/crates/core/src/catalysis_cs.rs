//! Convex-split catalysts: construction, copy counts, exact small-instance
//! checks, consumption, and the copy-count minimiser over catalyst families
//! `pφ⁺ + (1−p)ζ`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, shape, Error, Result};
use crate::qmat::{
    dmax_positive_definite, purified_distance, tensor_product_capped, DensityMatrix, Split,
};
use crate::qstates::{
    max_entangled_density, random_bipartite, random_full_rank, FullRankDensity, SeededRng,
    DEFAULT_MIN_EIG,
};
use crate::teleport::{average_fidelity_formula, entanglement_fraction};
use crate::{ceil_count, IMPRACTICAL_COUNT};

/// Largest joint dimension [`cs_joint_state_exact`] will build.
pub const EXACT_JOINT_CAP: usize = 64;

/// Coarse grid spacing in `p`.
pub const P_GRID_STEP: f64 = 1e-3;
/// Width at which golden-section refinement stops.
pub const P_REFINE_TOL: f64 = 1e-6;
const P_GRID_POINTS: usize = 1000;
const P_UPPER: f64 = 1.0 - 1e-12;

fn local_dim(rho: &DensityMatrix) -> Result<usize> {
    rho.split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| shape("state must carry a square d x d split"))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok(())
}

/// `τ = pφ⁺ + (1−p)ζ`.
pub fn build_tau(zeta: &FullRankDensity, p: f64) -> Result<DensityMatrix> {
    if !(0.0..1.0).contains(&p) {
        return Err(domain(format!("p = {p} outside [0, 1)")));
    }
    let d = local_dim(zeta)?;
    let phi = max_entangled_density(d)?;
    phi.mix(zeta, p)
}

/// `⌈2^(k+2) d / (ε(d+1))⌉`, saturating at [`IMPRACTICAL_COUNT`].
pub fn copies_for_fidelity(k: f64, d: usize, epsilon: f64) -> u64 {
    let d = d as f64;
    ceil_count((k + 2.0).exp2() * d / (epsilon * (d + 1.0)))
}

/// `ρ/n + (n−1)τ/n`, the system state after the convex-split step.
pub fn marginal_after_cs(rho: &DensityMatrix, tau: &DensityMatrix, n: u64) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(domain("copy count must be positive"));
    }
    rho.mix(tau, 1.0 / n as f64)
}

/// Catalyst choice guaranteeing average fidelity `1 − ε`.
#[derive(Clone, Debug)]
pub struct CsCatalystSpec {
    pub tau: DensityMatrix,
    pub p: f64,
    pub zeta: FullRankDensity,
    pub n: u64,
    pub k: f64,
}

impl CsCatalystSpec {
    pub fn marginal(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        marginal_after_cs(rho, &self.tau, self.n)
    }

    /// Dimension of the catalyst `τ^(⊗ n−1)` as `log2`.
    pub fn log2_catalyst_dim(&self) -> f64 {
        (self.n.saturating_sub(1)) as f64 * (self.tau.dim() as f64).log2()
    }
}

/// Smallest admissible mixing weight `max(0, 1 − ε(d+1)/(4d(1−F(ζ))))`.
pub fn minimal_p(zeta: &FullRankDensity, epsilon: f64) -> Result<f64> {
    let d = local_dim(zeta)? as f64;
    let gap = 1.0 - entanglement_fraction(zeta)?;
    if gap <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - epsilon * (d + 1.0) / (4.0 * d * gap)).max(0.0))
}

/// Catalyst with `p` at its minimal admissible value and `n` from the
/// fidelity copy-count formula.
pub fn plan_teleport_catalyst(
    rho: &DensityMatrix,
    zeta: &FullRankDensity,
    epsilon: f64,
) -> Result<CsCatalystSpec> {
    check_epsilon(epsilon)?;
    let d = local_dim(rho)?;
    if local_dim(zeta)? != d {
        return Err(shape("rho and zeta have different local dimensions"));
    }
    let p = minimal_p(zeta, epsilon)?;
    let tau = build_tau(zeta, p)?;
    let k = dmax_positive_definite(rho, &tau)?;
    Ok(CsCatalystSpec {
        n: copies_for_fidelity(k, d, epsilon),
        tau,
        p,
        zeta: zeta.clone(),
        k,
    })
}

/// Catalytic average fidelity `f(ρ⁽ⁿ⁾)` reached by `spec`.
pub fn catalytic_fidelity(rho: &DensityMatrix, spec: &CsCatalystSpec) -> Result<f64> {
    let d = local_dim(rho)?;
    average_fidelity_formula(entanglement_fraction(&spec.marginal(rho)?)?, d)
}

#[derive(Clone, Debug)]
pub struct CsJointState {
    /// `(1/n) Σ_t τ ⊗ … ⊗ ρ_t ⊗ … ⊗ τ`, slot 1 first.
    pub joint: DensityMatrix,
    pub tau_power: DensityMatrix,
    /// `P(joint, τ^⊗n)`.
    pub distance: f64,
}

/// Builds the convex-split mixture explicitly. Only small instances fit.
pub fn cs_joint_state_exact(rho: &DensityMatrix, tau: &DensityMatrix, n: usize) -> Result<CsJointState> {
    if n == 0 {
        return Err(domain("copy count must be positive"));
    }
    if rho.dim() != tau.dim() {
        return Err(shape("rho and tau have different dimensions"));
    }
    let total = (rho.dim() as u128).pow(n as u32);
    if total > EXACT_JOINT_CAP as u128 {
        return Err(Error::CapacityExceeded {
            dim: total.min(usize::MAX as u128) as usize,
            cap: EXACT_JOINT_CAP,
        });
    }
    let layer = |t: usize| -> Result<DensityMatrix> {
        let mut acc = if t == 0 { rho.clone() } else { tau.clone() };
        for slot in 1..n {
            let next = if slot == t { rho } else { tau };
            acc = tensor_product_capped(&acc, next, EXACT_JOINT_CAP)?;
        }
        Ok(acc)
    };
    let mut joint = layer(0)?;
    for t in 1..n {
        // Running uniform average: after layer t the weight of each is 1/(t+1).
        joint = layer(t)?.mix(&joint, 1.0 / (t + 1) as f64)?;
    }
    let tau_power = layer(usize::MAX)?;
    let split = Split::new(rho.dim(), joint.dim() / rho.dim());
    let joint = joint.with_split(split.a, split.b)?;
    let distance = purified_distance(&joint, &tau_power)?;
    Ok(CsJointState {
        joint,
        tau_power,
        distance,
    })
}

/// Catalyst change bound `√(2^k / n)`.
pub fn consumption_bound(k: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(domain("copy count must be positive"));
    }
    Ok((k.exp2() / n as f64).sqrt())
}

/// Fewest copies keeping the consumption bound below `δ`: `⌈2^k/δ²⌉`.
pub fn min_copies_for_consumption(k: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(domain(format!("delta {delta} must be positive")));
    }
    Ok(ceil_count(k.exp2() / (delta * delta)))
}

/// `(n_mixed − n_best) / n_mixed`.
pub fn descent_ratio(n_mixed: u64, n_best: u64) -> Result<f64> {
    if n_mixed == 0 {
        return Err(domain("benchmark copy count must be positive"));
    }
    Ok((n_mixed as f64 - n_best as f64) / n_mixed as f64)
}

/// Minimised copy count for one `ζ` and `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NminResult {
    pub n_min: u64,
    pub p_star: f64,
    /// `D_max(ρ‖τ)` at `p_star`.
    pub k_star: f64,
    /// Continuous objective at its minimiser, before the ceiling.
    pub objective: f64,
}

impl NminResult {
    pub fn is_impractical(&self) -> bool {
        self.n_min >= IMPRACTICAL_COUNT
    }
}

/// `D_max(ρ‖pφ⁺+(1−p)ζ)` as a function of `p`, with the coarse grid
/// precomputed so that several `ε` values can share it.
#[derive(Clone, Debug)]
pub struct NminProblem {
    rho: DensityMatrix,
    zeta: FullRankDensity,
    phi: DensityMatrix,
    d: usize,
    gap: f64,
    grid_k: Vec<f64>,
}

impl NminProblem {
    pub fn new(rho: &DensityMatrix, zeta: &FullRankDensity) -> Result<Self> {
        let d = local_dim(rho)?;
        if local_dim(zeta)? != d {
            return Err(shape("rho and zeta have different local dimensions"));
        }
        let phi = max_entangled_density(d)?;
        let gap = (1.0 - entanglement_fraction(zeta)?).max(0.0);
        let mut problem = Self {
            rho: rho.clone(),
            zeta: zeta.clone(),
            phi,
            d,
            gap,
            grid_k: Vec::new(),
        };
        problem.grid_k = (0..P_GRID_POINTS)
            .map(|i| problem.k_at(i as f64 * P_GRID_STEP))
            .collect::<Result<_>>()?;
        Ok(problem)
    }

    pub fn zeta(&self) -> &FullRankDensity {
        &self.zeta
    }

    pub fn k_at(&self, p: f64) -> Result<f64> {
        let tau = self.phi.mix(&self.zeta, p)?;
        dmax_positive_definite(&self.rho, &tau)
    }

    fn objective(&self, k: f64, p: f64, eps_prime: f64) -> f64 {
        let slack = eps_prime - ((1.0 - p) * self.gap).sqrt();
        if slack <= 0.0 {
            f64::INFINITY
        } else {
            k.exp2() / (slack * slack)
        }
    }

    /// `ε' = √(ε(d+1)/d)`.
    pub fn eps_prime(&self, epsilon: f64) -> f64 {
        let d = self.d as f64;
        (epsilon * (d + 1.0) / d).sqrt()
    }

    /// Whether `√(2^k/n) + √(1−F(τ_p)) ≤ ε'` holds.
    pub fn constraint_holds(&self, n: u64, p: f64, epsilon: f64) -> Result<bool> {
        let k = self.k_at(p)?;
        let lhs = (k.exp2() / n as f64).sqrt() + ((1.0 - p) * self.gap).sqrt();
        Ok(lhs <= self.eps_prime(epsilon) * (1.0 + 1e-12))
    }

    pub fn solve(&self, epsilon: f64) -> Result<NminResult> {
        check_epsilon(epsilon)?;
        let eps_prime = self.eps_prime(epsilon);
        let g: Vec<f64> = self
            .grid_k
            .iter()
            .enumerate()
            .map(|(i, &k)| self.objective(k, i as f64 * P_GRID_STEP, eps_prime))
            .collect();
        let best = (0..g.len()).fold(0, |b, i| if g[i] < g[b] { i } else { b });
        let grid_n = (0..g.len()).map(|i| ceil_count(g[i])).min().unwrap_or(IMPRACTICAL_COUNT);

        let mut result = NminResult {
            n_min: grid_n,
            p_star: 0.0,
            k_star: f64::INFINITY,
            objective: g[best],
        };
        if let Some(i) = (0..g.len()).find(|&i| ceil_count(g[i]) == grid_n) {
            result.p_star = i as f64 * P_GRID_STEP;
            result.k_star = self.grid_k[i];
        }
        if !g[best].is_finite() {
            // Only the region above the grid can be feasible.
            let lo = (P_GRID_POINTS - 1) as f64 * P_GRID_STEP;
            return self.refine(lo, P_UPPER, eps_prime, result);
        }
        let centre = best as f64 * P_GRID_STEP;
        let lo = (centre - P_GRID_STEP).max(0.0);
        let hi = (centre + P_GRID_STEP).min(P_UPPER);
        self.refine(lo, hi, eps_prime, result)
    }

    fn refine(&self, mut lo: f64, mut hi: f64, eps_prime: f64, mut result: NminResult) -> Result<NminResult> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let eval = |p: f64| -> Result<(f64, f64)> {
            let k = self.k_at(p)?;
            Ok((self.objective(k, p, eps_prime), k))
        };
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        while hi - lo > P_REFINE_TOL {
            if f1.0 <= f2.0 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        let (p, (gp, kp)) = if f1.0 <= f2.0 { (x1, f1) } else { (x2, f2) };
        if gp < result.objective {
            result.objective = gp;
        }
        let n = ceil_count(gp);
        if n < result.n_min {
            result.n_min = n;
            result.p_star = p;
            result.k_star = kp;
        }
        Ok(result)
    }
}

/// Minimal copy count over `p` for a fixed `ζ`; ties go to the smaller `p`.
pub fn nmin_over_p(rho: &DensityMatrix, zeta: &FullRankDensity, epsilon: f64) -> Result<NminResult> {
    check_epsilon(epsilon)?;
    NminProblem::new(rho, zeta)?.solve(epsilon)
}

/// Best candidate per `ε`.
#[derive(Clone, Debug)]
pub struct CandidateBest {
    pub epsilon: f64,
    pub index: usize,
    pub result: NminResult,
}

/// Evaluates every candidate on every `ε`, keeping the argmin by
/// `(n, candidate index)`.
pub fn nmin_over_candidates(
    rho: &DensityMatrix,
    candidates: &[FullRankDensity],
    epsilons: &[f64],
) -> Result<Vec<(Vec<NminResult>, CandidateBest)>> {
    if candidates.is_empty() {
        return Err(domain("need at least one candidate"));
    }
    for &e in epsilons {
        check_epsilon(e)?;
    }
    let table: Vec<Vec<NminResult>> = candidates
        .par_iter()
        .map(|z| {
            let problem = NminProblem::new(rho, z)?;
            epsilons.iter().map(|&e| problem.solve(e)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(epsilons
        .iter()
        .enumerate()
        .map(|(j, &epsilon)| {
            let column: Vec<NminResult> = table.iter().map(|row| row[j]).collect();
            let index = (0..column.len())
                .min_by_key(|&i| (column[i].n_min, i))
                .expect("nonempty candidates");
            let best = CandidateBest {
                epsilon,
                index,
                result: column[index],
            };
            (column, best)
        })
        .collect())
}

/// Random search over full-rank `ζ`.
#[derive(Clone, Debug)]
pub struct NminQuery {
    pub rho: DensityMatrix,
    pub epsilon: f64,
    /// Number of random candidates; `I/d²` is always added as candidate 0.
    pub candidates: usize,
    pub rng: SeededRng,
}

#[derive(Clone, Debug)]
pub struct NminOutcome {
    pub epsilon: f64,
    pub n_min_n: u64,
    pub best_zeta: FullRankDensity,
    pub best_index: usize,
    pub best: NminResult,
    pub n_min_mixed: u64,
    pub mixed: NminResult,
}

impl NminOutcome {
    pub fn descent_ratio(&self) -> f64 {
        descent_ratio(self.n_min_mixed, self.n_min_n).unwrap_or(0.0)
    }
}

/// `I/d²` followed by `count` random full-rank states; candidate `i ≥ 1`
/// comes from `rng.derive(i)`.
pub fn candidate_pool(d: usize, count: usize, rng: &SeededRng) -> Result<Vec<FullRankDensity>> {
    let mut pool = vec![FullRankDensity::maximally_mixed(d)?];
    let random: Vec<FullRankDensity> = (1..=count as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.derive(i);
            random_full_rank(d * d, Some(Split::square(d)), &mut stream, DEFAULT_MIN_EIG)
        })
        .collect::<Result<_>>()?;
    pool.extend(random);
    Ok(pool)
}

/// [`nmin_search`] over a grid of `ε`, sharing candidates and the `D_max`
/// profile of each.
pub fn nmin_search_grid(
    rho: &DensityMatrix,
    epsilons: &[f64],
    candidates: usize,
    rng: &SeededRng,
) -> Result<Vec<NminOutcome>> {
    let d = local_dim(rho)?;
    let pool = candidate_pool(d, candidates, rng)?;
    let per_eps = nmin_over_candidates(rho, &pool, epsilons)?;
    Ok(per_eps
        .into_iter()
        .map(|(column, best)| NminOutcome {
            epsilon: best.epsilon,
            n_min_n: best.result.n_min,
            best_zeta: pool[best.index].clone(),
            best_index: best.index,
            best: best.result,
            n_min_mixed: column[0].n_min,
            mixed: column[0],
        })
        .collect())
}

pub fn nmin_search(query: &NminQuery) -> Result<NminOutcome> {
    let mut out = nmin_search_grid(&query.rho, &[query.epsilon], query.candidates, &query.rng)?;
    Ok(out.remove(0))
}

/// One Monte Carlo draw of the descent experiment.
#[derive(Clone, Debug)]
pub struct DescentSample {
    pub index: usize,
    pub rho: DensityMatrix,
    pub f_rho: f64,
    pub epsilon: f64,
    pub n_min_mixed: u64,
    pub n_min_n: u64,
    pub ratio: f64,
}

/// `S` random initial states, each with `ε ~ U(0, 1 − f(ρ))` and `N` random
/// catalyst candidates. Sample `s` uses the stream `rng.derive(s)`.
pub fn descent_monte_carlo(d: usize, samples: usize, candidates: usize, rng: &SeededRng) -> Result<Vec<DescentSample>> {
    if samples == 0 {
        return Err(domain("need at least one sample"));
    }
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut stream = rng.derive(s as u64);
            let rho = random_bipartite(d, &mut stream)?;
            let f_rho = average_fidelity_formula(entanglement_fraction(&rho)?, d)?;
            let upper = 1.0 - f_rho;
            if upper <= 0.0 {
                return Err(domain("sampled state already teleports perfectly"));
            }
            let epsilon = loop {
                let e = stream.random::<f64>() * upper;
                if e > 0.0 {
                    break e;
                }
            };
            let pool_rng = SeededRng::new(stream.random::<u64>());
            let out = nmin_search_grid(&rho, &[epsilon], candidates, &pool_rng)?.remove(0);
            Ok(DescentSample {
                index: s,
                rho,
                f_rho,
                epsilon,
                n_min_mixed: out.n_min_mixed,
                n_min_n: out.n_min_n,
                ratio: out.descent_ratio(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> FullRankDensity {
        FullRankDensity::maximally_mixed(2).unwrap()
    }

    #[test]
    fn tau_examples() {
        let z = mixed();
        assert_eq!(build_tau(&z, 0.0).unwrap(), *z.state());
        let t = build_tau(&z, 0.9).unwrap();
        assert!((entanglement_fraction(&t).unwrap() - 0.925).abs() < 1e-12);
        assert!(matches!(build_tau(&z, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn copy_count_arithmetic() {
        assert_eq!(copies_for_fidelity(2.0, 2, 0.1), 107);
        assert_eq!(copies_for_fidelity(0.0, 2, 0.1), 27);
        assert_eq!(copies_for_fidelity(f64::INFINITY, 2, 0.1), IMPRACTICAL_COUNT);
        assert!((consumption_bound(2.0, 32).unwrap() - 0.3535533905932738).abs() < 1e-12);
        assert_eq!(min_copies_for_consumption(2.0, 0.1).unwrap(), 400);
        assert_eq!(descent_ratio(200, 150).unwrap(), 0.25);
        assert_eq!(descent_ratio(7, 7).unwrap(), 0.0);
    }

    #[test]
    fn marginal_small_n() {
        let mut rng = SeededRng::new(1);
        let rho = random_bipartite(2, &mut rng).unwrap();
        let tau = build_tau(&mixed(), 0.5).unwrap();
        assert_eq!(marginal_after_cs(&rho, &tau, 1).unwrap().matrix(), rho.matrix());
        let half = marginal_after_cs(&rho, &tau, 2).unwrap();
        assert!(half.matrix().max_abs_diff(&rho.mix(&tau, 0.5).unwrap().into_matrix()) < 1e-15);
        assert!(marginal_after_cs(&rho, &tau, 0).is_err());
    }

    #[test]
    fn joint_state_identical_layers() {
        let tau = build_tau(&mixed(), 0.3).unwrap();
        let j = cs_joint_state_exact(&tau, &tau, 3).unwrap();
        assert!(j.distance < 1e-7);
        assert_eq!(j.joint.dim(), 64);
        assert!(matches!(
            cs_joint_state_exact(&tau, &tau, 4),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn phi_plus_reaches_one_copy_for_loose_epsilon() {
        let phi = max_entangled_density(2).unwrap();
        let r = nmin_over_p(&phi, &mixed(), 0.9).unwrap();
        assert_eq!(r.n_min, 1);
    }

    #[test]
    fn plan_meets_target() {
        let mut rng = SeededRng::new(8);
        let rho = random_bipartite(2, &mut rng).unwrap();
        for eps in [0.05, 0.1, 0.2] {
            let spec = plan_teleport_catalyst(&rho, &mixed(), eps).unwrap();
            assert!(catalytic_fidelity(&rho, &spec).unwrap() >= 1.0 - eps);
        }
    }
}
