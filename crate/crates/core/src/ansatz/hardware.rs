//! Four-qubit circuit for linear-connectivity hardware: one label qubit, two
//! state qubits and one ancilla, three denoising repetitions.

use super::{build_circuit, AnsatzConfig, CircuitSpec, CnotSchedule, Connectivity, GateOp, Variant};
use crate::error::Result;

pub const HARDWARE_REPETITIONS: usize = 3;

/// Per-repetition denoising block. Line CNOT counts per layer are 2/3/2 on
/// the 3/4/3-qubit blocks, so layers (1, 2, 2) give 2 + 6 + 4 = 12 CNOTs and
/// three repetitions give 36.
pub fn hardware_config() -> AnsatzConfig {
    AnsatzConfig {
        n_data: 2,
        n_label: 1,
        m: 1,
        layers: [1, 2, 2],
        variant: Variant::ReverseBottleneck,
        connectivity: Connectivity::Line,
        cnot_schedule: CnotSchedule::EvenOdd,
    }
}

/// State preparation followed by [`HARDWARE_REPETITIONS`] denoising blocks,
/// each ending with a measure-and-restore of the label qubit.
pub fn build_hardware_adapted() -> Result<CircuitSpec> {
    let cfg = hardware_config();
    let prep = CircuitSpec::new(
        cfg.width(),
        cfg.n_label,
        vec![GateOp::Prepare {
            data: (cfg.n_label..cfg.width()).collect(),
            label: (0..cfg.n_label).collect(),
        }],
    )?;
    let block = build_circuit(&cfg)?;
    let mut parts = vec![prep];
    parts.extend(std::iter::repeat_n(block, HARDWARE_REPETITIONS));
    CircuitSpec::concat(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{cnot_moments, entangling_layers};

    #[test]
    fn cnot_accounting() {
        let c = build_hardware_adapted().unwrap();
        assert_eq!(c.max_width(), 4);
        assert_eq!(c.cnot_count(), 37);
        assert_eq!(c.cnots().count(), 36);
        assert!(c.cnots().all(|(a, b)| a.abs_diff(b) == 1));
        let layers = entangling_layers(c.ops());
        assert_eq!(layers.len(), 15);
        assert!(layers.iter().all(|l| cnot_moments(l) == 2));
        let restores = c
            .ops()
            .iter()
            .filter(|op| matches!(op, GateOp::LabelRestore { .. }))
            .count();
        assert_eq!(restores, HARDWARE_REPETITIONS);
        assert_eq!(c.param_count(), 3 * 51);
    }
}
