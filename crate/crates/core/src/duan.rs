//! Entropy-constrained lower bound for correlated catalysts and the qutrit
//! region map comparing it with embezzling catalysts.

use rayon::prelude::*;

use crate::catalysis_emb::{lemma2_bound, schmidt_rank_for};
use crate::error::{domain, shape, Result};
use crate::qstates::SchmidtVector;
use crate::{is_impractical, teleport::average_fidelity_formula};

/// Smallest accepted value of the simplex grid parameter.
pub const MIN_GRID: usize = 100;
/// Compass search stops once its step falls below this.
pub const REFINE_STEP_TOL: f64 = 1e-9;

fn entropy_of(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

fn fidelity_of(p: &[f64]) -> f64 {
    let s: f64 = p.iter().map(|&x| x.max(0.0).sqrt()).sum();
    (s * s + 1.0) / (p.len() as f64 + 1.0)
}

/// `−Σ p log2 p`.
pub fn shannon_entropy(probs: &SchmidtVector) -> f64 {
    entropy_of(probs.probs())
}

/// Average teleportation fidelity of `Σ √λ_i |ii⟩` after optimal local
/// alignment: `((Σ√λ_i)² + 1)/(d + 1)`.
pub fn pure_state_avg_fidelity(probs: &SchmidtVector, d: usize) -> Result<f64> {
    if probs.len() != d {
        return Err(shape(format!(
            "expected {d} Schmidt coefficients, got {}",
            probs.len()
        )));
    }
    let s: f64 = probs.probs().iter().map(|p| p.sqrt()).sum();
    average_fidelity_formula((s * s / d as f64).min(1.0), d)
}

/// Maximises the pure-state fidelity over the probability simplex subject to
/// an entropy budget. The barycentric grid is built once and sorted by
/// entropy, so each query is a binary search plus a local refinement.
#[derive(Clone, Debug)]
pub struct Lemma3Solver {
    d: usize,
    grid: usize,
    points: Vec<Vec<f64>>,
    entropies: Vec<f64>,
    /// `best[i]` indexes the highest-fidelity point among `points[..=i]`.
    best: Vec<usize>,
}

fn simplex_points(d: usize, grid: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, grid: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == d - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / grid as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(d, left - c, grid, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, grid, grid, &mut Vec::with_capacity(d), &mut out);
    out
}

impl Lemma3Solver {
    pub fn new(d: usize, grid: usize) -> Result<Self> {
        if d < 2 {
            return Err(domain(format!("need d >= 2, got {d}")));
        }
        if grid < MIN_GRID {
            return Err(domain(format!("grid {grid} below the minimum {MIN_GRID}")));
        }
        let mut points = simplex_points(d, grid);
        points.retain(|p| p.windows(2).all(|w| w[0] >= w[1]));
        let mut tagged: Vec<(f64, Vec<f64>)> = points.into_iter().map(|p| (entropy_of(&p), p)).collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let entropies: Vec<f64> = tagged.iter().map(|t| t.0).collect();
        let points: Vec<Vec<f64>> = tagged.into_iter().map(|t| t.1).collect();
        let mut best: Vec<usize> = Vec::with_capacity(points.len());
        for i in 0..points.len() {
            let b = match best.last() {
                Some(&b) if fidelity_of(&points[b]) >= fidelity_of(&points[i]) => b,
                _ => i,
            };
            best.push(b);
        }
        Ok(Self {
            d,
            grid,
            points,
            entropies,
            best,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Best fidelity with entropy at most `budget`, never below `f(start)`
    /// when `start` itself is feasible.
    pub fn solve_budget(&self, budget: f64, start: Option<&[f64]>) -> f64 {
        let count = self.entropies.partition_point(|&h| h <= budget);
        let mut x = match count {
            0 => {
                let mut corner = vec![0.0; self.d];
                corner[0] = 1.0;
                corner
            }
            n => self.points[self.best[n - 1]].clone(),
        };
        if let Some(s) = start {
            if self.feasible(s, budget) && fidelity_of(s) > fidelity_of(&x) {
                x = s.to_vec();
            }
        }
        let x = self.refine(x, budget);
        fidelity_of(&x)
    }

    // No slack here: near a corner a tiny entropy excess buys a fidelity
    // gain of order its square root.
    fn feasible(&self, p: &[f64], budget: f64) -> bool {
        entropy_of(p) <= budget
    }

    /// Pulls an infeasible point towards its largest corner until it meets the
    /// entropy level set.
    fn retract(&self, y: &[f64], budget: f64) -> Option<Vec<f64>> {
        let k = (0..y.len()).fold(0, |b, i| if y[i] > y[b] { i } else { b });
        let at = |t: f64| -> Vec<f64> {
            y.iter()
                .enumerate()
                .map(|(i, &v)| (1.0 - t) * v + if i == k { t } else { 0.0 })
                .collect()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if !self.feasible(&at(hi), budget) {
            return None;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&at(mid), budget) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(at(hi))
    }

    fn refine(&self, mut x: Vec<f64>, budget: f64) -> Vec<f64> {
        let mut fx = fidelity_of(&x);
        let mut step = 1.0 / self.grid as f64;
        let d = self.d;
        while step >= REFINE_STEP_TOL {
            let mut improved = false;
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    let mut y = x.clone();
                    let moved = step.min(y[j]);
                    if moved <= 0.0 {
                        continue;
                    }
                    y[i] += moved;
                    y[j] -= moved;
                    let candidate = if self.feasible(&y, budget) {
                        Some(y)
                    } else {
                        self.retract(&y, budget)
                    };
                    if let Some(y) = candidate {
                        let fy = fidelity_of(&y);
                        if fy > fx + 1e-15 {
                            x = y;
                            fx = fy;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        x
    }

    pub fn bound(&self, lambda: &SchmidtVector) -> Result<f64> {
        if lambda.len() != self.d {
            return Err(shape(format!(
                "expected {} Schmidt coefficients, got {}",
                self.d,
                lambda.len()
            )));
        }
        let own = fidelity_of(lambda.probs());
        let found = self.solve_budget(shannon_entropy(lambda), Some(lambda.probs()));
        Ok(found.max(own))
    }
}

/// Largest pure-state fidelity over Schmidt vectors `μ` with
/// `H(μ) ≤ H(λ)`, by simplex grid search and compass refinement.
pub fn lemma3_bound(lambda: &SchmidtVector, d: usize, grid: usize) -> Result<f64> {
    Lemma3Solver::new(d, grid)?.bound(lambda)
}

/// As [`lemma3_bound`] with an explicit entropy budget in bits.
pub fn lemma3_bound_with_budget(d: usize, budget: f64, grid: usize) -> Result<f64> {
    Ok(Lemma3Solver::new(d, grid)?.solve_budget(budget, None))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    AlreadyAbove,
    CorrelatedBoostable,
    NotGuaranteed,
    EmbezzlingBoostable,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AlreadyAbove => "AlreadyAbove",
            Self::CorrelatedBoostable => "CorrelatedBoostable",
            Self::NotGuaranteed => "NotGuaranteed",
            Self::EmbezzlingBoostable => "EmbezzlingBoostable",
        }
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionPoint {
    /// Raster coordinates, not sorted.
    pub lambda: [f64; 3],
    pub f: f64,
    pub lemma3_bound: f64,
    pub correlated: RegionLabel,
    pub embezzling: RegionLabel,
    /// Embezzling rank reaching `threshold + margin`, for points below the
    /// threshold.
    pub m_required: Option<u64>,
}

/// Qutrit region map settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionMapConfig {
    pub resolution: usize,
    pub threshold: f64,
    pub margin: f64,
    /// Grid used by the correlated-catalyst bound.
    pub bound_grid: usize,
}

impl Default for RegionMapConfig {
    fn default() -> Self {
        Self {
            resolution: 100,
            threshold: 0.9,
            margin: 0.01,
            bound_grid: MIN_GRID,
        }
    }
}

pub const MIN_RESOLUTION: usize = 50;

/// Labels every point `(i, j, r−i−j)/r` of the barycentric raster, in order
/// of increasing `i` then `j`.
pub fn qutrit_region_map(config: RegionMapConfig) -> Result<Vec<RegionPoint>> {
    let RegionMapConfig {
        resolution,
        threshold,
        margin,
        bound_grid,
    } = config;
    if resolution < MIN_RESOLUTION {
        return Err(domain(format!(
            "resolution {resolution} below the minimum {MIN_RESOLUTION}"
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) || !(margin >= 0.0) || threshold + margin >= 1.0 {
        return Err(domain(format!(
            "threshold {threshold} and margin {margin} must satisfy 0 < threshold < threshold + margin < 1"
        )));
    }
    let d = 3;
    let solver = Lemma3Solver::new(d, bound_grid)?;
    let m_required = schmidt_rank_for(d, 1.0 - threshold - margin)?;
    let raster: Vec<[f64; 3]> = (0..=resolution)
        .flat_map(|i| {
            (0..=resolution - i).map(move |j| {
                let r = resolution as f64;
                let k = resolution - i - j;
                [i as f64 / r, j as f64 / r, k as f64 / r]
            })
        })
        .collect();
    raster
        .into_par_iter()
        .map(|lambda| {
            let probs = SchmidtVector::new(lambda.to_vec())?;
            let f = pure_state_avg_fidelity(&probs, d)?;
            let bound = solver.bound(&probs)?;
            let (correlated, embezzling, m) = if f >= threshold {
                (RegionLabel::AlreadyAbove, RegionLabel::AlreadyAbove, None)
            } else if bound >= threshold {
                (RegionLabel::CorrelatedBoostable, RegionLabel::EmbezzlingBoostable, Some(m_required))
            } else {
                (RegionLabel::NotGuaranteed, RegionLabel::EmbezzlingBoostable, Some(m_required))
            };
            Ok(RegionPoint {
                lambda,
                f,
                lemma3_bound: bound,
                correlated,
                embezzling,
                m_required: m,
            })
        })
        .collect()
}

/// Whether rank `m` lifts the average fidelity to `target` through the
/// overlap bound.
pub fn embezzling_rank_reaches(d: usize, m: u64, target: f64) -> Result<bool> {
    if is_impractical(m) {
        return Ok(false);
    }
    let fraction = lemma2_bound(d, m as usize)?;
    Ok(average_fidelity_formula(fraction, d)? >= target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(p: &[f64]) -> SchmidtVector {
        SchmidtVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(shannon_entropy(&sv(&[1.0, 0.0])), 0.0);
        let u = SchmidtVector::uniform(3).unwrap();
        assert!((shannon_entropy(&u) - 3f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn pure_fidelity_values() {
        assert!((pure_state_avg_fidelity(&SchmidtVector::uniform(3).unwrap(), 3).unwrap() - 1.0).abs() < 1e-12);
        assert!((pure_state_avg_fidelity(&sv(&[1.0, 0.0]), 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(pure_state_avg_fidelity(&sv(&[1.0, 0.0]), 3).is_err());
    }

    #[test]
    fn bound_edge_cases() {
        let u = SchmidtVector::uniform(3).unwrap();
        assert!((lemma3_bound(&u, 3, 100).unwrap() - 1.0).abs() < 1e-9);
        assert!((lemma3_bound(&sv(&[1.0, 0.0]), 2, 100).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((lemma3_bound(&sv(&[1.0, 0.0, 0.0]), 3, 100).unwrap() - 0.5).abs() < 1e-12);
        assert!(lemma3_bound(&u, 3, 99).is_err());
    }

    #[test]
    fn qubit_bound_is_own_fidelity() {
        let l = sv(&[0.8, 0.2]);
        let own = pure_state_avg_fidelity(&l, 2).unwrap();
        assert!((lemma3_bound(&l, 2, 100).unwrap() - own).abs() < 1e-8);
    }
}
