//! Lowering of input-state preparation to `ry`/`rz`/`cx`/`x` gates for
//! export. Any one- or two-qubit state is reachable with at most one CNOT.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{bail, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrepGate {
    Ry(usize, f64),
    Rz(usize, f64),
    Cx(usize, usize),
    X(usize),
}

pub(crate) fn prep_cnot_cost(n_data: usize) -> usize {
    usize::from(n_data == 2)
}

pub(crate) fn prep_histogram(n_data: usize) -> Vec<(&'static str, usize)> {
    match n_data {
        1 => vec![("ry", 1), ("rz", 1)],
        2 => vec![("ry", 3), ("rz", 4), ("cx", 1)],
        _ => vec![],
    }
}

const EPS: f64 = 1e-14;

/// ZYZ angles `(β, γ, δ)` with `u ∝ Rz(β)·Ry(γ)·Rz(δ)`.
fn zyz(u: &Matrix2<Complex64>) -> (f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.sqrt();
    let a = u[(0, 0)] / phase;
    let b = u[(1, 0)] / phase;
    let gamma = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > EPS { -2.0 * a.arg() } else { 0.0 };
    let diff = if b.norm() > EPS { 2.0 * b.arg() } else { 0.0 };
    ((sum + diff) / 2.0, gamma, (sum - diff) / 2.0)
}

fn push_unitary(gates: &mut Vec<PrepGate>, q: usize, u: &Matrix2<Complex64>) {
    let (beta, gamma, delta) = zyz(u);
    gates.extend([PrepGate::Rz(q, delta), PrepGate::Ry(q, gamma), PrepGate::Rz(q, beta)]);
}

/// Gates preparing `amps` (up to global phase) on `data` from `|0…0⟩`, then
/// setting the label register to `|label⟩`.
pub fn lower_state_prep(
    data: &[usize],
    label_qubits: &[usize],
    amps: &[Complex64],
    label: usize,
) -> Result<Vec<PrepGate>> {
    if amps.len() != 1 << data.len() {
        bail!(Export, "{} amplitudes for {} prepared qubit(s)", amps.len(), data.len());
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        bail!(Export, "cannot prepare the zero vector");
    }
    let amps: Vec<Complex64> = amps.iter().map(|a| a / norm).collect();
    let mut gates = Vec::new();
    match data {
        [q] => {
            let theta = 2.0 * amps[1].norm().atan2(amps[0].norm());
            let phi = amps[1].arg() - amps[0].arg();
            gates.extend([PrepGate::Ry(*q, theta), PrepGate::Rz(*q, phi)]);
        }
        [qa, qb] => {
            let c = Matrix2::new(amps[0], amps[1], amps[2], amps[3]);
            let svd = c.svd(true, true);
            let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
            let s = svd.singular_values;
            gates.push(PrepGate::Ry(*qa, 2.0 * s[1].atan2(s[0])));
            gates.push(PrepGate::Cx(*qa, *qb));
            push_unitary(&mut gates, *qa, &u);
            push_unitary(&mut gates, *qb, &v_t.transpose());
        }
        _ => bail!(
            Export,
            "state preparation is supported for one or two qubits, not {}",
            data.len()
        ),
    }
    let nl = label_qubits.len();
    if label >= 1 << nl {
        bail!(Export, "label {label} does not fit in {nl} qubit(s)");
    }
    for (k, &q) in label_qubits.iter().enumerate() {
        if (label >> (nl - 1 - k)) & 1 == 1 {
            gates.push(PrepGate::X(q));
        }
    }
    Ok(gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vector, seeded};
    use crate::statevec::{amplitude_encode, fidelity, tensor_label, Axis, Pauli, QuantumState};

    fn run(gates: &[PrepGate], n: usize) -> QuantumState {
        let mut s = QuantumState::zero(n);
        for g in gates {
            match *g {
                PrepGate::Ry(q, a) => s.rotate(q, Axis::Y, a).unwrap(),
                PrepGate::Rz(q, a) => s.rotate(q, Axis::Z, a).unwrap(),
                PrepGate::Cx(c, t) => s.cnot(c, t).unwrap(),
                PrepGate::X(q) => s.pauli(q, Pauli::X).unwrap(),
            }
        }
        s
    }

    #[test]
    fn prepares_random_states() {
        let mut rng = seeded(21);
        for _ in 0..50 {
            let v1 = normal_vector(&mut rng, 2, true);
            let g1 = lower_state_prep(&[0], &[], &v1, 0).unwrap();
            assert!(fidelity(&run(&g1, 1), &amplitude_encode(&v1, true).unwrap()).unwrap() > 1.0 - 1e-12);
            let v2 = normal_vector(&mut rng, 4, true);
            let g2 = lower_state_prep(&[1, 2], &[0], &v2, 1).unwrap();
            assert_eq!(g2.iter().filter(|g| matches!(g, PrepGate::Cx(..))).count(), 1);
            let want = tensor_label(&amplitude_encode(&v2, true).unwrap(), 1, 1).unwrap();
            assert!(fidelity(&run(&g2, 3), &want).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn product_and_basis_states() {
        let c = |re| Complex64::new(re, 0.0);
        for v in [
            vec![c(1.0), c(0.0), c(0.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0), c(1.0)],
            vec![c(0.5), c(0.5), c(0.5), c(0.5)],
            vec![c(0.0), c(1.0), c(0.0), c(0.0)],
        ] {
            let g = lower_state_prep(&[0, 1], &[], &v, 0).unwrap();
            assert!(fidelity(&run(&g, 2), &amplitude_encode(&v, true).unwrap()).unwrap() > 1.0 - 1e-12);
        }
        assert!(lower_state_prep(&[0, 1, 2], &[], &[c(1.0); 8], 0).is_err());
    }
}
