//! Standard qudit teleportation with a generalised Bell measurement.

use rayon::prelude::*;

use crate::error::{domain, shape, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, C64, ZERO};
use crate::qstates::{random_pure, PureStateVector, SeededRng};

/// Bell basis on `R⊗A` and Bob's correction for every outcome.
///
/// Outcome `k = a·d + b` projects onto `(I ⊗ XᵃZᵇ)|φ⁺⟩`; the matching
/// correction is `(XᵃZᵇ)ᵀ = Zᵇ X⁻ᵃ`.
#[derive(Clone, Debug)]
pub struct TeleportOutcomeTable {
    d: usize,
    /// `bell[k][r·d + s]`, amplitudes of outcome `k` on `|r⟩_R|s⟩_A`.
    bell: Vec<Vec<C64>>,
    corrections: Vec<ComplexMatrix>,
}

fn root_of_unity(d: usize, power: usize) -> C64 {
    let theta = 2.0 * std::f64::consts::PI * ((power % d) as f64) / d as f64;
    C64::new(theta.cos(), theta.sin())
}

/// `Xᵃ Zᵇ` with `X|j⟩ = |j+1⟩` and `Z|j⟩ = ωʲ|j⟩`.
pub fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |row, col| {
        if row == (col + a) % d {
            root_of_unity(d, b * col)
        } else {
            ZERO
        }
    })
}

pub fn bell_basis(d: usize) -> Result<TeleportOutcomeTable> {
    if d < 2 {
        return Err(domain(format!("teleportation needs d >= 2, got {d}")));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut bell = Vec::with_capacity(d * d);
    let mut corrections = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut v = vec![ZERO; d * d];
            for r in 0..d {
                v[r * d + (r + a) % d] = root_of_unity(d, b * r) * norm;
            }
            bell.push(v);
            let w = weyl(d, a, b);
            corrections.push(ComplexMatrix::from_fn(d, d, |i, j| w.get(j, i)));
        }
    }
    Ok(TeleportOutcomeTable { d, bell, corrections })
}

impl TeleportOutcomeTable {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn outcomes(&self) -> usize {
        self.bell.len()
    }

    pub fn bell_state(&self, k: usize) -> &[C64] {
        &self.bell[k]
    }

    pub fn correction(&self, k: usize) -> &ComplexMatrix {
        &self.corrections[k]
    }

    pub fn corrections(&self) -> &[ComplexMatrix] {
        &self.corrections
    }

    /// Rank-one projector `|Φ_k⟩⟨Φ_k|` on `R⊗A`.
    pub fn projector(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.bell[k])
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        (0..self.outcomes()).map(|k| self.projector(k)).collect()
    }

    /// Bob's state `Σ_k U_k ⟨Φ_k|(ψ⊗ρ)|Φ_k⟩ U_k†`.
    pub fn channel(&self, resource: &DensityMatrix, message: &PureStateVector) -> Result<DensityMatrix> {
        let d = self.d;
        match resource.split() {
            Some(s) if s.a == d && s.b == d => {}
            _ => return Err(shape(format!("resource must be split {d}x{d}"))),
        }
        if message.dim() != d {
            return Err(shape(format!(
                "message has dimension {}, expected {d}",
                message.dim()
            )));
        }
        let psi = message.amplitudes();
        let rho = resource.matrix();
        let mut out = ComplexMatrix::zeros(d, d);
        let mut block = ComplexMatrix::zeros(d, d);
        for k in 0..self.outcomes() {
            let phi = &self.bell[k];
            let alpha: Vec<C64> = (0..d)
                .map(|s| (0..d).fold(ZERO, |acc, r| acc + phi[r * d + s].conj() * psi[r]))
                .collect();
            for b in 0..d {
                for b2 in 0..d {
                    let mut acc = ZERO;
                    for s in 0..d {
                        if alpha[s] == ZERO {
                            continue;
                        }
                        for s2 in 0..d {
                            acc += alpha[s] * alpha[s2].conj() * rho.get(s * d + b, s2 * d + b2);
                        }
                    }
                    block.set(b, b2, acc);
                }
            }
            let u = &self.corrections[k];
            let rotated = &(u * &block) * &u.adjoint();
            out = &out + &rotated;
        }
        Ok(DensityMatrix::from_trusted(out.hermitian_part(), None))
    }
}

/// Reusable channel evaluator for a fixed local dimension.
#[derive(Clone, Debug)]
pub struct Teleporter {
    table: TeleportOutcomeTable,
}

impl Teleporter {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            table: bell_basis(d)?,
        })
    }

    pub fn table(&self) -> &TeleportOutcomeTable {
        &self.table
    }

    pub fn channel(&self, resource: &DensityMatrix, message: &PureStateVector) -> Result<DensityMatrix> {
        self.table.channel(resource, message)
    }

    /// `⟨ψ|Θ(ψ⊗ρ)|ψ⟩`.
    pub fn fidelity(&self, resource: &DensityMatrix, message: &PureStateVector) -> Result<f64> {
        Ok(self.channel(resource, message)?.expectation(message.amplitudes()))
    }
}

pub fn teleport_channel(resource: &DensityMatrix, message: &PureStateVector) -> Result<DensityMatrix> {
    let d = message.dim();
    Teleporter::new(d)?.channel(resource, message)
}

/// `Tr[ρ φ⁺]` for a `d × d` state.
pub fn entanglement_fraction(rho: &DensityMatrix) -> Result<f64> {
    let d = rho
        .split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| shape("entanglement fraction needs a square d x d split"))?;
    let m = rho.matrix();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += m.get(i * d + i, j * d + j).re;
        }
    }
    Ok((acc / d as f64).clamp(0.0, 1.0))
}

/// `(F·d + 1)/(d + 1)`.
pub fn average_fidelity_formula(fraction: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(domain(format!("entanglement fraction {fraction} outside [0, 1]")));
    }
    if d == 0 {
        return Err(domain("dimension must be positive"));
    }
    let d = d as f64;
    Ok((fraction * d + 1.0) / (d + 1.0))
}

/// Average teleportation fidelity `f(ρ)`.
pub fn average_fidelity(rho: &DensityMatrix) -> Result<f64> {
    let d = rho.split().and_then(|s| s.square_dim()).unwrap_or(0);
    average_fidelity_formula(entanglement_fraction(rho)?, d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

pub const MIN_MC_SAMPLES: usize = 100;

/// Haar average of the teleportation fidelity. Sample `i` draws its message
/// from the stream `rng.derive(i)`, so the result depends only on
/// `rng.seed()`, not on the thread count.
pub fn average_fidelity_mc(resource: &DensityMatrix, samples: usize, rng: &SeededRng) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(domain(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let d = resource
        .split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| shape("resource must have a square split"))?;
    let tele = Teleporter::new(d)?;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.derive(i);
            let psi = random_pure(d, None, &mut stream)?;
            tele.fidelity(resource, &psi)
        })
        .collect::<Result<_>>()?;
    let mut stats = RunningStats::default();
    values.iter().for_each(|&v| stats.push(v));
    Ok(McEstimate {
        mean: stats.mean(),
        stderr: stats.stderr(),
        samples,
    })
}
