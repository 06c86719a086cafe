//! Maximally entangled states, random samplers, Schmidt decomposition and the
//! JSON matrix document.

use std::ops::Deref;

use nalgebra::DMatrix;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, Split, C64, ZERO};

/// Norm tolerance of a [`PureStateVector`].
pub const NORM_TOL: f64 = 1e-10;
/// Default eigenvalue floor for [`random_full_rank`].
pub const DEFAULT_MIN_EIG: f64 = 1e-6;
/// Consecutive rejections before [`random_full_rank`] gives up.
pub const MAX_REJECTIONS: usize = 1000;

/// ChaCha20 stream tagged with the seed that started it.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        "chacha20"
    }

    /// Independent stream number `index`, seeded with `seed ^ index`.
    pub fn derive(&self, index: u64) -> Self {
        Self::new(self.seed ^ index)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn gaussian(rng: &mut SeededRng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Unit vector with an optional bipartite split.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateVector {
    amps: Vec<C64>,
    split: Option<Split>,
}

impl PureStateVector {
    pub fn new(amps: Vec<C64>, split: Option<Split>) -> Result<Self> {
        if amps.is_empty() {
            return Err(shape("state vector must be nonempty"));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("vector norm {norm} is not one")));
        }
        if let Some(s) = split {
            if s.dim() != amps.len() {
                return Err(shape(format!(
                    "split {}x{} does not match length {}",
                    s.a,
                    s.b,
                    amps.len()
                )));
            }
        }
        Ok(Self { amps, split })
    }

    /// Normalises `amps` first.
    pub fn normalized(mut amps: Vec<C64>, split: Option<Split>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        amps.iter_mut().for_each(|z| *z /= norm);
        Self::new(amps, split)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(ComplexMatrix::outer(&self.amps), self.split)
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
            .norm_sqr()
    }
}

/// Squared Schmidt coefficients in nonincreasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtVector {
    probs: Vec<f64>,
}

impl SchmidtVector {
    /// Sorts `probs` into nonincreasing order. Tiny negative entries from
    /// rounding (above `-1e-12`) are set to zero.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(shape("Schmidt vector must be nonempty"));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::InvalidState(format!("invalid probability {p}")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        probs.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension must be positive"));
        }
        Self::new(vec![1.0 / d as f64; d])
    }
}

/// `|ψ⟩ = Σ_k √p_k |u_k⟩|v_k⟩`; `left` and `right` hold `u_k`, `v_k` as columns.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: SchmidtVector,
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
}

impl SchmidtDecomposition {
    pub fn rank(&self, cutoff: f64) -> usize {
        self.coefficients.probs().iter().filter(|&&p| p > cutoff).count()
    }

    pub fn reconstruct(&self) -> Vec<C64> {
        let (a, b) = (self.left.rows(), self.right.rows());
        let probs = self.coefficients.probs();
        let mut out = vec![ZERO; a * b];
        for (k, p) in probs.iter().enumerate() {
            let s = p.sqrt();
            for i in 0..a {
                let u = self.left.get(i, k) * s;
                for j in 0..b {
                    out[i * b + j] += u * self.right.get(j, k);
                }
            }
        }
        out
    }
}

/// `(1/√d) Σ_i |ii⟩`.
pub fn max_entangled(d: usize) -> Result<PureStateVector> {
    if d == 0 {
        return Err(domain("dimension must be positive"));
    }
    let mut amps = vec![ZERO; d * d];
    let a = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        amps[i * d + i] = C64::new(a, 0.0);
    }
    PureStateVector::new(amps, Some(Split::square(d)))
}

/// `φ⁺` as a density matrix with split `d × d`.
pub fn max_entangled_density(d: usize) -> Result<DensityMatrix> {
    Ok(max_entangled(d)?.density())
}

/// Hilbert–Schmidt sample `G G† / Tr(G G†)`.
pub fn random_density(dim: usize, rng: &mut SeededRng) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(domain("dimension must be positive"));
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let m = ComplexMatrix::from(w.map(|z| z / tr)).hermitian_part();
    Ok(DensityMatrix::from_trusted(m, None))
}

/// [`random_density`] on `d × d` with the split declared.
pub fn random_bipartite(d: usize, rng: &mut SeededRng) -> Result<DensityMatrix> {
    random_density(d * d, rng)?.with_split(d, d)
}

/// Haar-random unit vector.
pub fn random_pure(dim: usize, split: Option<Split>, rng: &mut SeededRng) -> Result<PureStateVector> {
    if dim == 0 {
        return Err(domain("dimension must be positive"));
    }
    let amps = (0..dim).map(|_| gaussian(rng)).collect();
    PureStateVector::normalized(amps, split)
}

/// State whose smallest eigenvalue is known to clear a floor.
#[derive(Clone, Debug, PartialEq)]
pub struct FullRankDensity {
    state: DensityMatrix,
    min_eig: f64,
}

impl FullRankDensity {
    pub fn new(state: DensityMatrix, min_eig: f64) -> Result<Self> {
        let lowest = state.min_eigenvalue();
        if lowest < min_eig || lowest <= 0.0 {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {lowest:e} is below {min_eig:e}"
            )));
        }
        Ok(Self {
            state,
            min_eig: lowest,
        })
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        let rho = DensityMatrix::maximally_mixed(d * d, Some(Split::square(d)))?;
        Self::new(rho, 0.0)
    }

    /// Smallest eigenvalue observed at construction.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn into_state(self) -> DensityMatrix {
        self.state
    }
}

impl Deref for FullRankDensity {
    type Target = DensityMatrix;
    fn deref(&self) -> &DensityMatrix {
        &self.state
    }
}

/// Rejection-samples [`random_density`] until the minimum eigenvalue is at
/// least `min_eig`.
pub fn random_full_rank(
    dim: usize,
    split: Option<Split>,
    rng: &mut SeededRng,
    min_eig: f64,
) -> Result<FullRankDensity> {
    if !(min_eig >= 0.0) {
        return Err(domain(format!("min_eig {min_eig} must be nonnegative")));
    }
    for _ in 0..MAX_REJECTIONS {
        let rho = random_density(dim, rng)?;
        if rho.min_eigenvalue() >= min_eig.max(f64::MIN_POSITIVE) {
            let rho = match split {
                Some(s) => rho.with_split(s.a, s.b)?,
                None => rho,
            };
            return FullRankDensity::new(rho, min_eig);
        }
    }
    Err(Error::SamplerStalled(MAX_REJECTIONS))
}

pub fn schmidt_decompose(psi: &PureStateVector) -> Result<SchmidtDecomposition> {
    let split = psi
        .split()
        .ok_or_else(|| shape("Schmidt decomposition needs a declared split"))?;
    let (a, b) = (split.a, split.b);
    let amps = psi.amplitudes();
    let m = DMatrix::from_fn(a, b, |i, j| amps[i * b + j]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));

    let raw: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k] * svd.singular_values[k])
        .collect();
    let total: f64 = raw.iter().sum();
    let probs = raw.iter().map(|p| p / total).collect();
    let left = ComplexMatrix::from_fn(a, r, |i, c| u[(i, order[c])]);
    let right = ComplexMatrix::from_fn(b, r, |j, c| v_t[(order[c], j)]);
    Ok(SchmidtDecomposition {
        coefficients: SchmidtVector::new(probs)?,
        left,
        right,
    })
}

/// On-disk matrix: `{"dim", "splitA", "splitB", "entries": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub dim: usize,
    #[serde(rename = "splitA")]
    pub split_a: usize,
    #[serde(rename = "splitB")]
    pub split_b: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixDocument {
    /// Unsplit states are written with `splitA = dim, splitB = 1`.
    pub fn from_matrix(m: &ComplexMatrix, split: Option<Split>) -> Self {
        let split = split.unwrap_or(Split::new(m.rows(), 1));
        let entries = (0..m.rows())
            .map(|i| {
                (0..m.cols())
                    .map(|j| {
                        let z = m.get(i, j);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        Self {
            dim: m.rows(),
            split_a: split.a,
            split_b: split.b,
            entries,
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_matrix(rho.matrix(), rho.split())
    }

    /// Raw matrix and split, without any state validation.
    pub fn to_matrix(&self) -> Result<(ComplexMatrix, Split)> {
        if self.split_a * self.split_b != self.dim {
            return Err(shape(format!(
                "splitA x splitB = {} x {} does not equal dim {}",
                self.split_a, self.split_b, self.dim
            )));
        }
        if self.entries.len() != self.dim || self.entries.iter().any(|r| r.len() != self.dim) {
            return Err(shape(format!("entries are not a {0}x{0} array", self.dim)));
        }
        let flat = self
            .entries
            .iter()
            .flatten()
            .map(|&[re, im]| C64::new(re, im))
            .collect();
        let m = ComplexMatrix::from_row_major(self.dim, self.dim, flat)?;
        Ok((m, Split::new(self.split_a, self.split_b)))
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let (m, split) = self.to_matrix()?;
        DensityMatrix::new(m, Some(split))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| shape(format!("bad matrix document: {e}")))
    }
}
