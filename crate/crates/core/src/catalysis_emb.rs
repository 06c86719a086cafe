//! Embezzling catalysts: the harmonic embezzling state, the `ω` state and
//! local rearrangement, exact protocol output, and catalyst consumption.

use std::collections::BTreeMap;

use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, C64};
use crate::IMPRACTICAL_COUNT;

/// Cap on `d·M`, the dimension of each party's side `AC` (or `BC'`).
pub const SIDE_DIM_CAP: usize = 4096;

/// `Σ_{j=1}^{M} 1/j`, summed smallest term first.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).rev().map(|j| 1.0 / j as f64).sum()
}

/// `|τ⟩ = c_M^{-1/2} Σ_j j^{-1/2} |jj⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbezzlingState {
    m: usize,
    c_m: f64,
    amps: Vec<f64>,
}

impl EmbezzlingState {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(domain("Schmidt rank must be positive"));
        }
        let c_m = harmonic(m);
        let amps = (1..=m).map(|j| 1.0 / (j as f64 * c_m).sqrt()).collect();
        Ok(Self { m, c_m, amps })
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn normalizer(&self) -> f64 {
        self.c_m
    }

    /// Amplitude of `|jj⟩`, `j` zero-based.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    /// The state as a sparse ket on `C⊗C'`.
    pub fn ket(&self) -> SparseKet {
        let m = self.m;
        SparseKet::from_entries(
            m * m,
            self.amps
                .iter()
                .enumerate()
                .map(|(j, &a)| (j * m + j, C64::new(a, 0.0))),
        )
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        let ket = self.ket().to_dense();
        DensityMatrix::from_ket(&ket, Some(crate::qmat::Split::square(self.m)))
    }
}

pub fn embezzling_state(m: usize) -> Result<EmbezzlingState> {
    EmbezzlingState::new(m)
}

/// Pure state with few nonzero amplitudes, kept sorted by basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseKet {
    dim: usize,
    entries: Vec<(usize, C64)>,
}

impl SparseKet {
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, C64)>) -> Self {
        let mut map: BTreeMap<usize, C64> = BTreeMap::new();
        for (i, a) in entries {
            assert!(i < dim, "basis index {i} out of range {dim}");
            *map.entry(i).or_insert(C64::new(0.0, 0.0)) += a;
        }
        Self {
            dim,
            entries: map.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, C64)] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = C64::new(0.0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1.conj() * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut map: BTreeMap<usize, C64> = self.entries.iter().copied().collect();
        for &(i, b) in &other.entries {
            *map.entry(i).or_insert(C64::new(0.0, 0.0)) -= b;
        }
        map.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim];
        for &(i, a) in &self.entries {
            v[i] = a;
        }
        v
    }
}

/// `|ω⟩ = Σ_{i,j} ω_ij |ii⟩|jj⟩` with `ω_ij = 1/√(⌈((i−1)M+j)/d⌉ d c_M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaState {
    d: usize,
    m: usize,
    coeffs: Vec<f64>,
}

impl OmegaState {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m < d {
            return Err(domain(format!("omega state needs M >= d >= 1, got d = {d}, M = {m}")));
        }
        let c_m = harmonic(m);
        let coeffs = (0..d * m)
            .map(|idx| {
                let l = idx / d + 1;
                1.0 / ((l * d) as f64 * c_m).sqrt()
            })
            .collect();
        Ok(Self { d, m, coeffs })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    /// `ω_ij` with zero-based `(i, j)`.
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.m + j]
    }

    /// Coefficients in dictionary order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Flat index `((a·d + b)·M + c)·M + c'` on `A⊗B⊗C⊗C'`.
    pub fn ket(&self) -> SparseKet {
        let (d, m) = (self.d, self.m);
        SparseKet::from_entries(
            d * d * m * m,
            (0..d).flat_map(|i| {
                (0..m).map(move |j| (joint_index(d, m, i, i, j, j), (i, j)))
            })
            .map(|(idx, (i, j))| (idx, C64::new(self.coefficient(i, j), 0.0))),
        )
    }
}

pub fn omega_state(d: usize, m: usize) -> Result<OmegaState> {
    OmegaState::new(d, m)
}

fn joint_index(d: usize, m: usize, a: usize, b: usize, c: usize, c2: usize) -> usize {
    ((a * d + b) * m + c) * m + c2
}

/// `|i⟩_A|j⟩_C ↦ |k⟩_A|l⟩_C` with `(i−1)M + j = (l−1)d + k` (one-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RearrangementPermutation {
    d: usize,
    m: usize,
    forward: Vec<(usize, usize)>,
}

impl RearrangementPermutation {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m < d {
            return Err(domain(format!("rearrangement needs M >= d >= 1, got d = {d}, M = {m}")));
        }
        let forward = (0..d * m).map(|idx| (idx % d, idx / d)).collect();
        Ok(Self { d, m, forward })
    }

    /// Image `(k, l)` of zero-based `(i, j)`.
    pub fn apply(&self, i: usize, j: usize) -> (usize, usize) {
        self.forward[i * self.m + j]
    }

    pub fn forward_map(&self) -> &[(usize, usize)] {
        &self.forward
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.d * self.m];
        for &(k, l) in &self.forward {
            if k >= self.d || l >= self.m || std::mem::replace(&mut seen[l * self.d + k], true) {
                return false;
            }
        }
        true
    }

    /// `U_AC ⊗ U_BC'` applied to a ket on `A⊗B⊗C⊗C'`.
    pub fn apply_to(&self, ket: &SparseKet) -> SparseKet {
        let (d, m) = (self.d, self.m);
        assert_eq!(ket.dim(), d * d * m * m, "ket dimension does not match");
        SparseKet::from_entries(
            ket.dim(),
            ket.entries().iter().map(|&(idx, amp)| {
                let c2 = idx % m;
                let c = (idx / m) % m;
                let b = (idx / (m * m)) % d;
                let a = idx / (m * m * d);
                let (ka, la) = self.apply(a, c);
                let (kb, lb) = self.apply(b, c2);
                (joint_index(d, m, ka, kb, la, lb), amp)
            }),
        )
    }
}

pub fn rearrangement_perm(d: usize, m: usize) -> Result<RearrangementPermutation> {
    RearrangementPermutation::new(d, m)
}

/// `|φ⁺⟩_AB ⊗ |τ⟩_CC'` on the flat index of [`OmegaState::ket`].
pub fn target_ket(d: usize, tau: &EmbezzlingState) -> SparseKet {
    let m = tau.rank();
    let s = 1.0 / (d as f64).sqrt();
    SparseKet::from_entries(
        d * d * m * m,
        (0..d).flat_map(|k| {
            tau.amplitudes()
                .iter()
                .enumerate()
                .map(move |(l, &a)| (joint_index(d, m, k, k, l, l), C64::new(s * a, 0.0)))
        }),
    )
}

fn check_side(d: usize, m: usize) -> Result<()> {
    if d < 1 || m < d {
        return Err(domain(format!("need M >= d >= 1, got d = {d}, M = {m}")));
    }
    let side = d.saturating_mul(m);
    if side > SIDE_DIM_CAP {
        return Err(Error::CapacityExceeded {
            dim: side,
            cap: SIDE_DIM_CAP,
        });
    }
    Ok(())
}

/// Pure output `U(|11⟩⊗|τ⟩)` of the embezzling protocol.
#[derive(Clone, Debug)]
pub struct EmbezzleOutcome {
    pub d: usize,
    pub m: usize,
    pub joint: SparseKet,
    pub target: SparseKet,
    /// `F_U(joint, φ⁺⊗τ) = |⟨φ⁺⊗τ|joint⟩|²`.
    pub fidelity: f64,
}

impl EmbezzleOutcome {
    /// Dense joint density matrix, only for tiny instances.
    pub fn joint_density(&self) -> Result<DensityMatrix> {
        let dim = self.joint.dim();
        if dim > crate::qmat::DEFAULT_DIM_CAP {
            return Err(Error::CapacityExceeded {
                dim,
                cap: crate::qmat::DEFAULT_DIM_CAP,
            });
        }
        DensityMatrix::from_ket(&self.joint.to_dense(), None)
    }
}

/// Discards `AB`, prepares `|11⟩`, and rearranges. The input only fixes `d`.
pub fn embezzle_protocol(rho: &DensityMatrix, m: usize) -> Result<EmbezzleOutcome> {
    let d = rho
        .split()
        .and_then(|s| s.square_dim())
        .ok_or_else(|| crate::error::shape("state must carry a square d x d split"))?;
    embezzle_protocol_for(d, m)
}

pub fn embezzle_protocol_for(d: usize, m: usize) -> Result<EmbezzleOutcome> {
    check_side(d, m)?;
    let tau = EmbezzlingState::new(m)?;
    let input = SparseKet::from_entries(
        d * d * m * m,
        tau.amplitudes()
            .iter()
            .enumerate()
            .map(|(j, &a)| (joint_index(d, m, 0, 0, j, j), C64::new(a, 0.0))),
    );
    let joint = RearrangementPermutation::new(d, m)?.apply_to(&input);
    let target = target_ket(d, &tau);
    let fidelity = target.inner(&joint).norm_sqr().min(1.0);
    Ok(EmbezzleOutcome {
        d,
        m,
        joint,
        target,
        fidelity,
    })
}

/// `Σ_j ω_1j / √(j c_M)`.
pub fn overlap_sum(d: usize, m: usize) -> Result<f64> {
    let omega = OmegaState::new(d, m)?;
    let tau = EmbezzlingState::new(m)?;
    Ok((0..m)
        .map(|j| omega.coefficient(0, j) * tau.amplitudes()[j])
        .sum())
}

/// `Σ_j ω_1j²`, the middle link of the overlap chain.
pub fn first_row_weight(d: usize, m: usize) -> Result<f64> {
    let omega = OmegaState::new(d, m)?;
    Ok((0..m).map(|j| omega.coefficient(0, j).powi(2)).sum())
}

/// `((ln M − ln d)/ln M)²`.
pub fn lemma2_bound(d: usize, m: usize) -> Result<f64> {
    if d < 2 || m < d {
        return Err(domain(format!("bound needs M >= d >= 2, got d = {d}, M = {m}")));
    }
    let (ld, lm) = ((d as f64).ln(), (m as f64).ln());
    Ok(((lm - ld) / lm).powi(2))
}

/// `a / b` to double-double accuracy; the library quotient alone is off by
/// about one double ulp.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * TwoFloat::from(q1);
    let q2 = r.hi() / b.hi();
    let r = r - b * TwoFloat::from(q2);
    let q3 = r.hi() / b.hi();
    TwoFloat::from(q1) + TwoFloat::from(q2) + TwoFloat::from(q3)
}

/// `e^r` by Taylor series, accurate to double-double precision for `|r| ≤ 0.35`.
fn dd_exp_small(r: TwoFloat) -> TwoFloat {
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for k in 1..40 {
        term = dd_div(term * r, TwoFloat::from(k as f64));
        sum += term;
        if term.hi().abs() < 1e-34 {
            break;
        }
    }
    sum
}

/// `log2 d`, refined by Newton steps on `2^y = d`.
fn dd_log2(d: f64) -> TwoFloat {
    let ln2 = twofloat::consts::LN_2;
    let mut y = TwoFloat::from(d.log2());
    for _ in 0..3 {
        let n = y.hi().round();
        let pow = dd_exp_small((y - TwoFloat::from(n)) * ln2) * TwoFloat::from(n.exp2());
        y += dd_div(dd_div(TwoFloat::from(d), pow) - TwoFloat::from(1.0), ln2);
    }
    y
}

/// `⌈d^e⌉` in double-double arithmetic, saturating at [`IMPRACTICAL_COUNT`].
fn ceil_power(d: usize, exponent: TwoFloat) -> u64 {
    let log2_value = dd_log2(d as f64) * exponent;
    if log2_value.hi() >= 40.0 {
        return IMPRACTICAL_COUNT;
    }
    let n = log2_value.hi().round();
    let rest = (log2_value - TwoFloat::from(n)) * twofloat::consts::LN_2;
    let value = dd_exp_small(rest) * TwoFloat::from(n.exp2());
    let c = value.ceil();
    let n = c.hi() as i64 + c.lo() as i64;
    (n.max(1) as u64).min(IMPRACTICAL_COUNT)
}

/// `log2` of the rank formula value before the ceiling, for reporting.
pub fn log2_rank_value(d: usize, x: f64) -> f64 {
    (dd_log2(d as f64) * rank_exponent(x)).hi()
}

/// `(1 + √(1−x))/x`, equal to `1/(1 − √(1−x))` without the cancellation.
fn rank_exponent(x: f64) -> TwoFloat {
    let x = TwoFloat::from(x);
    dd_div(TwoFloat::from(1.0) + (TwoFloat::from(1.0) - x).sqrt(), x)
}

/// Schmidt rank `⌈d^(1/(1−√(1−x)))⌉` for a fidelity deficit `x ∈ (0, 1]`,
/// saturating at [`IMPRACTICAL_COUNT`].
pub fn schmidt_rank_for_deficit(d: usize, x: f64) -> Result<u64> {
    if d < 1 {
        return Err(domain("dimension must be positive"));
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(domain(format!("deficit {x} outside (0, 1]")));
    }
    Ok(ceil_power(d, rank_exponent(x)))
}

/// Rank reaching average teleportation fidelity `1 − ε`; requires
/// `ε(d+1)/d < 1`.
pub fn schmidt_rank_for(d: usize, epsilon: f64) -> Result<u64> {
    let x = epsilon * (d as f64 + 1.0) / d as f64;
    if !(epsilon > 0.0) || !(x < 1.0) {
        return Err(domain(format!(
            "need 0 < epsilon (d+1)/d < 1, got epsilon = {epsilon}, d = {d}"
        )));
    }
    schmidt_rank_for_deficit(d, x)
}

/// `⌈d^(2/δ²)⌉`, the rank keeping the consumption bound below `δ`.
pub fn min_rank_for_consumption(d: usize, delta: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(domain(format!("delta {delta} must be positive")));
    }
    let dl = TwoFloat::from(delta);
    Ok(ceil_power(d, dd_div(TwoFloat::from(2.0), dl * dl)))
}

/// `√(2 log_M d)`.
pub fn consumption_bound(d: usize, m: usize) -> Result<f64> {
    if d < 1 || m < 2 {
        return Err(domain(format!("bound needs M >= 2, got M = {m}")));
    }
    Ok((2.0 * (d as f64).ln() / (m as f64).ln()).sqrt())
}

/// Catalyst state left on `CC'` after the protocol, kept as its rank-`≤d`
/// decomposition `ξ = Σ_g |v_g⟩⟨v_g|`, one term per `AB` basis index.
#[derive(Clone, Debug)]
pub struct CatalystResidual {
    pub d: usize,
    pub m: usize,
    pub components: Vec<SparseKet>,
    pub tau: EmbezzlingState,
    /// `P(ξ, τ)` from the partial trace.
    pub p_exact: f64,
    /// The same distance from the closed-form sum.
    pub p_closed_form: f64,
    /// `√(2 log_M d)`.
    pub p_bound: f64,
}

impl CatalystResidual {
    pub fn trace(&self) -> f64 {
        self.components.iter().map(SparseKet::norm_sqr).sum()
    }

    /// `ξ` and `τ` restricted to `span{|ll⟩}` as dense `M × M` states. Errors
    /// if `ξ` has weight outside that subspace.
    pub fn to_density_on_support(&self) -> Result<(DensityMatrix, DensityMatrix)> {
        let m = self.m;
        let mut xi = ComplexMatrix::zeros(m, m);
        for v in &self.components {
            let mut diag = vec![C64::new(0.0, 0.0); m];
            for &(idx, a) in v.entries() {
                let (c, c2) = (idx / m, idx % m);
                if c != c2 {
                    return Err(Error::InvalidState(format!(
                        "residual has weight on |{c}{c2}>"
                    )));
                }
                diag[c] = a;
            }
            xi = &xi + &ComplexMatrix::outer(&diag);
        }
        let amps: Vec<C64> = self.tau.amplitudes().iter().map(|&a| C64::new(a, 0.0)).collect();
        Ok((
            DensityMatrix::new(xi, None)?,
            DensityMatrix::from_ket(&amps, None)?,
        ))
    }
}

/// Purified distance from the closed-form sum over `m` with
/// `K = ⌈m/d⌉` and `k_i = m − ⌊(m−1)/d⌋d + (i−1)d`.
pub fn closed_form_distance(d: usize, m: usize) -> Result<f64> {
    if d < 1 || m < 1 {
        return Err(domain("need d, M >= 1"));
    }
    let c = harmonic(m);
    let mut total = 0.0;
    for mm in 1..=m {
        let big_k = mm.div_ceil(d);
        let base = mm - ((mm - 1) / d) * d;
        let mut inner = 0.0;
        for i in 1..big_k {
            let k_i = base + (i - 1) * d;
            inner += 2.0 / ((i * k_i * mm * big_k) as f64).sqrt();
        }
        total += inner + 1.0 / (mm * big_k) as f64;
    }
    let f = total / (c * c);
    Ok((1.0 - f).max(0.0).sqrt())
}

pub fn catalyst_residual(d: usize, m: usize) -> Result<CatalystResidual> {
    let outcome = embezzle_protocol_for(d, m)?;
    let cc = m * m;
    let mut groups: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
    for &(idx, a) in outcome.joint.entries() {
        groups.entry(idx / cc).or_default().push((idx % cc, a));
    }
    let components: Vec<SparseKet> = groups
        .into_values()
        .map(|entries| SparseKet::from_entries(cc, entries))
        .collect();
    let tau = EmbezzlingState::new(m)?;
    let tau_ket = tau.ket();
    let fidelity: f64 = components.iter().map(|v| tau_ket.inner(v).norm_sqr()).sum();
    let p_exact = (1.0 - fidelity.min(1.0)).max(0.0).sqrt();
    Ok(CatalystResidual {
        d,
        m,
        components,
        p_exact,
        p_closed_form: closed_form_distance(d, m)?,
        p_bound: consumption_bound(d, m)?,
        tau,
    })
}
