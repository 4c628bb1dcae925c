//! Projective measurement channels and register bookkeeping.

use num_complex::Complex64;
use rand::Rng;

use super::{cumulative, sample_index, QuantumState};
use crate::error::{bail, Result};

/// Branches lighter than this are dropped from ensembles.
pub const BRANCH_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub state: QuantumState,
}

/// Exact mixture `{(p_k, |ψ_k⟩)}` left by a measurement whose outcome is
/// accepted unconditionally.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn pure(state: QuantumState) -> Self {
        Self {
            branches: vec![Branch {
                probability: 1.0,
                state,
            }],
        }
    }

    /// Drops branches below [`BRANCH_CUTOFF`] and renormalizes the weights.
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        let mut branches: Vec<Branch> = branches
            .into_iter()
            .filter(|b| b.probability >= BRANCH_CUTOFF)
            .collect();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if branches.is_empty() || total <= 0.0 {
            bail!(State, "ensemble has no branch with non-negligible weight");
        }
        let n = branches[0].state.n_qubits();
        if branches.iter().any(|b| b.state.n_qubits() != n) {
            bail!(Shape, "ensemble branches disagree on qubit count");
        }
        for b in &mut branches {
            b.probability /= total;
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.branches[0].state.n_qubits()
    }

    /// Diagonal of the mixture's density matrix.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n_qubits()];
        for b in &self.branches {
            for (o, a) in out.iter_mut().zip(b.state.amplitudes()) {
                *o += b.probability * a.norm_sqr();
            }
        }
        out
    }
}

/// Packs measured bits of basis index `i` into an outcome integer; the first
/// listed qubit becomes the most-significant outcome bit.
#[inline]
fn outcome_of(i: usize, masks: &[usize]) -> usize {
    masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(i & m != 0))
}

fn validate_qubits(s: &QuantumState, qubits: &[usize]) -> Result<Vec<usize>> {
    if qubits.is_empty() {
        bail!(Index, "measurement needs at least one qubit");
    }
    for (k, &q) in qubits.iter().enumerate() {
        s.check_qubit(q)?;
        if qubits[..k].contains(&q) {
            bail!(Index, "qubit {q} listed twice");
        }
    }
    Ok(qubits.iter().map(|&q| s.stride(q)).collect())
}

fn outcome_bits(outcome: usize, width: usize) -> Vec<u8> {
    (0..width).map(|k| ((outcome >> (width - 1 - k)) & 1) as u8).collect()
}

fn outcome_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b != 0))
}

fn marginals(s: &QuantumState, masks: &[usize]) -> Vec<f64> {
    let mut probs = vec![0.0; 1 << masks.len()];
    for (i, a) in s.amplitudes().iter().enumerate() {
        probs[outcome_of(i, masks)] += a.norm_sqr();
    }
    probs
}

fn collapse(s: &QuantumState, masks: &[usize], outcome: usize, prob: f64) -> QuantumState {
    let inv = 1.0 / prob.sqrt();
    let amps = s
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if outcome_of(i, masks) == outcome {
                a * inv
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    QuantumState::from_raw(amps)
}

/// Measures `qubits` without selecting an outcome: one renormalized branch per
/// outcome with non-negligible probability, ordered by outcome value.
pub fn measure_branches(s: &QuantumState, qubits: &[usize]) -> Result<BranchEnsemble> {
    let masks = validate_qubits(s, qubits)?;
    let probs = marginals(s, &masks);
    let branches = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= BRANCH_CUTOFF)
        .map(|(o, &p)| Branch {
            probability: p,
            state: collapse(s, &masks, o, p),
        })
        .collect();
    BranchEnsemble::new(branches)
}

/// Draws a Born-rule outcome for `qubits` and returns it with the collapsed
/// state. Bits are listed in the order of `qubits`.
pub fn measure_sample<R: Rng + ?Sized>(
    s: &QuantumState,
    qubits: &[usize],
    rng: &mut R,
) -> Result<(Vec<u8>, QuantumState)> {
    let masks = validate_qubits(s, qubits)?;
    let probs = marginals(s, &masks);
    let outcome = sample_index(&cumulative(&probs), rng);
    let state = collapse(s, &masks, outcome, probs[outcome]);
    Ok((outcome_bits(outcome, qubits.len()), state))
}

/// Projects `qubits` onto `outcome` and renormalizes.
pub fn postselect(s: &QuantumState, qubits: &[usize], outcome: &[u8]) -> Result<QuantumState> {
    let masks = validate_qubits(s, qubits)?;
    if outcome.len() != qubits.len() {
        bail!(Shape, "{} outcome bits for {} qubits", outcome.len(), qubits.len());
    }
    let target = outcome_index(outcome);
    let prob: f64 = s
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| outcome_of(*i, &masks) == target)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if prob < BRANCH_CUTOFF {
        bail!(Postselect, "outcome {outcome:?} has probability {prob:e}");
    }
    Ok(collapse(s, &masks, target, prob))
}

/// Removes `qubits`, which must already sit in the basis state `outcome`.
pub fn discard_qubits(s: &QuantumState, qubits: &[usize], outcome: &[u8]) -> Result<QuantumState> {
    let masks = validate_qubits(s, qubits)?;
    if outcome.len() != qubits.len() {
        bail!(Shape, "{} outcome bits for {} qubits", outcome.len(), qubits.len());
    }
    if qubits.len() >= s.n_qubits() {
        bail!(State, "cannot discard every qubit of the register");
    }
    let target = outcome_index(outcome);
    let mut stray = 0.0;
    let mut kept = Vec::with_capacity(s.dim() >> qubits.len());
    for (i, a) in s.amplitudes().iter().enumerate() {
        if outcome_of(i, &masks) == target {
            kept.push(*a);
        } else {
            stray += a.norm_sqr();
        }
    }
    if stray > BRANCH_CUTOFF {
        bail!(
            State,
            "qubits {qubits:?} are not collapsed to {outcome:?} (stray mass {stray:e})"
        );
    }
    Ok(QuantumState::from_raw(kept))
}

/// Appends `m` fresh `|0⟩` qubits as the least-significant qubits.
pub fn add_ancilla(s: &QuantumState, m: usize) -> Result<QuantumState> {
    if m == 0 {
        bail!(Config, "ancilla count must be at least 1");
    }
    Ok(s.kron(&QuantumState::zero(m)))
}

/// `|k⟩ ⊗ |s⟩` with the `n_label` label qubits prepended as most significant.
pub fn tensor_label(s: &QuantumState, k: usize, n_label: usize) -> Result<QuantumState> {
    if k >= 1 << n_label {
        bail!(Label, "label {k} does not fit in {n_label} qubit(s)");
    }
    Ok(QuantumState::basis(n_label, k)?.kron(s))
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// `Σ_k p_k |⟨ψ_k|b⟩|²`.
pub fn mixed_fidelity(e: &BranchEnsemble, b: &QuantumState) -> Result<f64> {
    e.branches()
        .iter()
        .map(|br| Ok(br.probability * fidelity(&br.state, b)?))
        .sum()
}
