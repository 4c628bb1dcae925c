//! Monte-Carlo trajectory noise: single-qubit depolarizing and symmetric
//! readout flips.

use rand::Rng;

use super::QuantumState;
use crate::error::{bail, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        bail!(Config, "probability {p} outside [0, 1]");
    }
    Ok(())
}

pub fn random_pauli<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    Pauli::ALL[rng.random_range(0..4)]
}

/// One trajectory of the depolarizing channel `ρ → (1−p)ρ + p·I/2`: with
/// probability `p` the qubit is hit by a Pauli drawn uniformly from
/// `{I, X, Y, Z}`.
pub fn depolarize_trajectory<R: Rng + ?Sized>(
    s: &QuantumState,
    qubit: usize,
    p: f64,
    rng: &mut R,
) -> Result<QuantumState> {
    let mut out = s.clone();
    depolarize_in_place(&mut out, qubit, p, rng)?;
    Ok(out)
}

pub(crate) fn depolarize_in_place<R: Rng + ?Sized>(
    s: &mut QuantumState,
    qubit: usize,
    p: f64,
    rng: &mut R,
) -> Result<()> {
    check_probability(p)?;
    s.check_qubit(qubit)?;
    if p > 0.0 && rng.random::<f64>() < p {
        s.pauli(qubit, random_pauli(rng))?;
    }
    Ok(())
}

/// Flips each bit independently with probability `p_ro`.
pub fn readout_flip<R: Rng + ?Sized>(outcome: &[u8], p_ro: f64, rng: &mut R) -> Result<Vec<u8>> {
    check_probability(p_ro)?;
    Ok(outcome
        .iter()
        .map(|&b| {
            if p_ro > 0.0 && rng.random::<f64>() < p_ro {
                b ^ 1
            } else {
                b
            }
        })
        .collect())
}
