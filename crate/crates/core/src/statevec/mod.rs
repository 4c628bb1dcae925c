//! Dense state-vector simulation.
//!
//! Qubit 0 is the most-significant bit of the basis index: for an `n`-qubit
//! register, qubit `q` selects bit `n - 1 - q`. Amplitude encoding therefore
//! places `v[i]` on the basis state whose binary expansion, read from qubit 0
//! downward, is `i`.

mod measure;
pub(crate) mod noise;

pub use measure::{
    add_ancilla, discard_qubits, fidelity, measure_branches, measure_sample, mixed_fidelity, postselect, tensor_label,
    Branch, BranchEnsemble, BRANCH_CUTOFF,
};
pub use noise::{depolarize_trajectory, random_pauli, readout_flip, Pauli};
pub use swap_test::{swap_test_circuit, swap_test_estimate, swap_test_p0};

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

const ENCODE_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pure state of `n_qubits` qubits held as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << n_qubits {
            bail!(Index, "basis index {index} out of range for {n_qubits} qubits");
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes without checking normalization. Callers guarantee the
    /// length is a power of two.
    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        let n_qubits = amps.len().trailing_zeros() as usize;
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            bail!(Shape, "qubit count mismatch: {} vs {}", self.n_qubits, other.n_qubits);
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub(crate) fn renormalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            bail!(Index, "qubit {qubit} out of range for {}-qubit state", self.n_qubits);
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies the 2×2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [Complex64; 4]) {
        let stride = self.stride(qubit);
        let [m00, m01, m10, m11] = m;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m00 * x0 + m01 * x1;
                *a1 = m10 * x0 + m11 * x1;
            }
        }
    }

    /// `exp(-i·angle/2·σ_axis)` on `qubit`.
    pub fn rotate(&mut self, qubit: usize, axis: Axis, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let stride = self.stride(qubit);
        match axis {
            Axis::X => {
                let ms = Complex64::new(0.0, -s);
                self.apply_single(qubit, [c.into(), ms, ms, c.into()]);
            }
            Axis::Y => {
                for block in self.amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = block.split_at_mut(stride);
                    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (x0, x1) = (*a0, *a1);
                        *a0 = x0 * c - x1 * s;
                        *a1 = x0 * s + x1 * c;
                    }
                }
            }
            Axis::Z => {
                let lo_phase = Complex64::new(c, -s);
                let hi_phase = Complex64::new(c, s);
                for block in self.amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = block.split_at_mut(stride);
                    lo.iter_mut().for_each(|a| *a *= lo_phase);
                    hi.iter_mut().for_each(|a| *a *= hi_phase);
                }
            }
        }
        Ok(())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            bail!(Index, "cnot control and target are both qubit {control}");
        }
        let cmask = self.stride(control);
        let tmask = self.stride(target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    pub fn pauli(&mut self, qubit: usize, pauli: Pauli) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            match pauli {
                Pauli::I => {}
                Pauli::X => lo.swap_with_slice(hi),
                Pauli::Y => {
                    // Y = [[0, -i], [i, 0]]
                    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (x0, x1) = (*a0, *a1);
                        *a0 = Complex64::new(x1.im, -x1.re);
                        *a1 = Complex64::new(-x0.im, x0.re);
                    }
                }
                Pauli::Z => hi.iter_mut().for_each(|a| *a = -*a),
            }
        }
        Ok(())
    }

    pub fn hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [h, h, h, -h]);
        Ok(())
    }

    /// Controlled swap (Fredkin).
    pub fn cswap(&mut self, control: usize, a: usize, b: usize) -> Result<()> {
        for q in [control, a, b] {
            self.check_qubit(q)?;
        }
        if control == a || control == b || a == b {
            bail!(Index, "cswap needs three distinct qubits");
        }
        let (cm, am, bm) = (self.stride(control), self.stride(a), self.stride(b));
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & am != 0 && i & bm == 0 {
                self.amps.swap(i, (i & !am) | bm);
            }
        }
        Ok(())
    }

    /// Marginal probability that `qubit` reads 1.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.stride(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Tensor product `self ⊗ other`, with `self` on the more significant qubits.
    pub fn kron(&self, other: &QuantumState) -> QuantumState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        QuantumState::from_raw(amps)
    }
}

/// Writes `v` into the amplitudes of a `log2(len)`-qubit state.
pub fn amplitude_encode(v: &[Complex64], renormalize: bool) -> Result<QuantumState> {
    if v.is_empty() || !v.len().is_power_of_two() {
        bail!(Shape, "vector length {} is not a power of two", v.len());
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        bail!(Encoding, "cannot encode a vector with norm {norm}");
    }
    let mut state = QuantumState::from_raw(v.to_vec());
    if renormalize {
        state.renormalize();
    } else if (norm - 1.0).abs() > ENCODE_NORM_TOL {
        bail!(Norm, "vector norm {norm} is not 1");
    }
    Ok(state)
}

pub fn amplitude_encode_real(v: &[f64], renormalize: bool) -> Result<QuantumState> {
    let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    amplitude_encode(&c, renormalize)
}

pub fn apply_rotation(s: &QuantumState, qubit: usize, axis: Axis, angle: f64) -> Result<QuantumState> {
    let mut out = s.clone();
    out.rotate(qubit, axis, angle)?;
    Ok(out)
}

pub fn apply_cnot(s: &QuantumState, control: usize, target: usize) -> Result<QuantumState> {
    let mut out = s.clone();
    out.cnot(control, target)?;
    Ok(out)
}

/// Pauli X on `qubit` when `classical_bit` is 1, identity otherwise.
pub fn apply_x_conditioned(s: &QuantumState, qubit: usize, classical_bit: u8) -> Result<QuantumState> {
    s.check_qubit(qubit)?;
    let mut out = s.clone();
    if classical_bit == 1 {
        out.pauli(qubit, Pauli::X)?;
    }
    Ok(out)
}

/// Elementwise `|amplitude|`.
pub fn decode_amplitudes(s: &QuantumState) -> Vec<f64> {
    s.amps.iter().map(|a| a.norm()).collect()
}

/// `sqrt(count / shots)` per basis state from `shots` computational-basis
/// measurements.
pub fn decode_from_shots<R: Rng + ?Sized>(s: &QuantumState, shots: usize, rng: &mut R) -> Result<Vec<f64>> {
    if shots == 0 {
        bail!(Config, "shots must be at least 1");
    }
    let counts = sample_counts(&s.probabilities(), shots, rng);
    Ok(counts.iter().map(|&c| (c as f64 / shots as f64).sqrt()).collect())
}

/// Draws `shots` outcomes from `probs` and tallies them.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Vec<u64> {
    let cdf = cumulative(probs);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[sample_index(&cdf, rng)] += 1;
    }
    counts
}

pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

pub(crate) fn sample_index<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u: f64 = rng.random::<f64>() * total;
    let idx = cdf.partition_point(|&c| c <= u);
    // Guard against u landing on the total due to rounding; skip empty tail bins.
    let mut idx = idx.min(cdf.len() - 1);
    while idx > 0 && cdf[idx] == cdf[idx - 1] {
        idx -= 1;
    }
    idx
}
