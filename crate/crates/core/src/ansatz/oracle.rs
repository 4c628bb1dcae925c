//! Reference executor for tests: forks on every ancilla measurement by
//! explicit projection and keeps all outcomes, without pruning.

use super::{CircuitSpec, GateOp};
use crate::statevec::{discard_qubits, postselect, QuantumState};

pub(crate) struct OracleBranch {
    pub outcomes: Vec<usize>,
    pub probability: f64,
    pub state: QuantumState,
}

pub(crate) fn branch_oracle(c: &CircuitSpec, params: &[f64], input: &QuantumState) -> Vec<OracleBranch> {
    let mut branches = vec![OracleBranch {
        outcomes: Vec::new(),
        probability: 1.0,
        state: input.clone(),
    }];
    for op in c.ops() {
        let mut next = Vec::new();
        for mut b in branches {
            match op {
                GateOp::Rotation { qubit, axis, param } => {
                    b.state.rotate(*qubit, *axis, params[*param]).unwrap();
                    next.push(b);
                }
                GateOp::Cnot { control, target } => {
                    b.state.cnot(*control, *target).unwrap();
                    next.push(b);
                }
                GateOp::AddAncilla { count } => {
                    b.state = b.state.kron(&QuantumState::zero(*count));
                    next.push(b);
                }
                GateOp::Measure { qubits, .. } => {
                    let w = qubits.len();
                    for v in 0..1usize << w {
                        let bits: Vec<u8> = (0..w).map(|k| ((v >> (w - 1 - k)) & 1) as u8).collect();
                        // |Π ψ|² by summing amplitudes matching the outcome
                        let n = b.state.n_qubits();
                        let mass: f64 = b
                            .state
                            .amplitudes()
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| {
                                qubits
                                    .iter()
                                    .zip(&bits)
                                    .all(|(&q, &bit)| ((i >> (n - 1 - q)) & 1) as u8 == bit)
                            })
                            .map(|(_, z)| z.norm_sqr())
                            .sum();
                        if mass == 0.0 {
                            continue;
                        }
                        let mut outcomes = b.outcomes.clone();
                        outcomes.push(v);
                        next.push(OracleBranch {
                            outcomes,
                            probability: b.probability * mass,
                            state: postselect(&b.state, qubits, &bits).unwrap(),
                        });
                    }
                }
                GateOp::Discard { qubits, .. } => {
                    let v = *b.outcomes.last().unwrap();
                    let w = qubits.len();
                    let bits: Vec<u8> = (0..w).map(|k| ((v >> (w - 1 - k)) & 1) as u8).collect();
                    b.state = discard_qubits(&b.state, qubits, &bits).unwrap();
                    next.push(b);
                }
                GateOp::LabelRestore { .. } => next.push(b),
                GateOp::CondX { .. } | GateOp::Prepare { .. } => panic!("oracle has no classical control"),
            }
        }
        branches = next;
    }
    branches
}
