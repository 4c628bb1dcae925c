//! OpenQASM 2.0 export.
//!
//! Register growth and shrinkage are mapped onto a fixed physical register:
//! discarded qubits return to a free pool and are reset with a classically
//! conditioned X before reuse.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_complex::Complex64;

use super::prep::{lower_state_prep, PrepGate};
use super::{CircuitSpec, GateOp};
use crate::error::{bail, Result};
use crate::format::fmt_sig;
use crate::statevec::Axis;

const ANGLE_DIGITS: usize = 12;

/// Values bound into a circuit at export time.
#[derive(Clone, Debug, Default)]
pub struct ExportBindings<'a> {
    pub params: &'a [f64],
    /// Amplitudes for the `Prepare` op.
    pub input: Option<&'a [Complex64]>,
    /// Label `k` used by state preparation and label restores.
    pub label: Option<usize>,
    /// Append a final measurement of the data qubits into `out`.
    pub measure_output: bool,
}

struct Layout {
    /// logical qubit → physical qubit
    logical: Vec<usize>,
    /// physical qubit → register holding the value it was left in
    free: BTreeSet<usize>,
    reset_from: Vec<Option<(usize, usize, usize)>>,
    width: usize,
}

impl Layout {
    fn new(n: usize) -> Self {
        Self {
            logical: (0..n).collect(),
            free: BTreeSet::new(),
            reset_from: vec![None; n],
            width: n,
        }
    }

    fn phys(&self, q: usize) -> usize {
        self.logical[q]
    }
}

fn angle(x: f64) -> String {
    fmt_sig(x, ANGLE_DIGITS)
}

/// Emits `x` on `q` for every value of `reg` (width `w`) whose bit `j`
/// differs from `want`.
fn conditional_flip(body: &mut String, reg: usize, w: usize, j: usize, want: u8, q: usize) {
    for v in 0..1usize << w {
        let bit = ((v >> (w - 1 - j)) & 1) as u8;
        if bit != want {
            let _ = writeln!(body, "if(c{reg}=={v}) x q[{q}];");
        }
    }
}

pub fn export_qasm(circuit: &CircuitSpec, bind: &ExportBindings<'_>) -> Result<String> {
    if bind.params.len() != circuit.param_count() {
        bail!(
            Export,
            "{} parameters bound for a circuit expecting {}",
            bind.params.len(),
            circuit.param_count()
        );
    }
    let mut layout = Layout::new(circuit.entry_width());
    let mut body = String::new();
    let mut cregs: Vec<(usize, usize)> = Vec::new();

    for op in circuit.ops() {
        match op {
            GateOp::Rotation { qubit, axis, param } => {
                let name = match axis {
                    Axis::X => "rx",
                    Axis::Y => "ry",
                    Axis::Z => "rz",
                };
                let _ = writeln!(
                    body,
                    "{name}({}) q[{}];",
                    angle(bind.params[*param]),
                    layout.phys(*qubit)
                );
            }
            GateOp::Cnot { control, target } => {
                let _ = writeln!(body, "cx q[{}],q[{}];", layout.phys(*control), layout.phys(*target));
            }
            GateOp::AddAncilla { count } => {
                for _ in 0..*count {
                    let p = match layout.free.pop_first() {
                        Some(p) => p,
                        None => {
                            layout.width += 1;
                            layout.reset_from.push(None);
                            layout.width - 1
                        }
                    };
                    if let Some((reg, w, j)) = layout.reset_from[p].take() {
                        conditional_flip(&mut body, reg, w, j, 0, p);
                    }
                    layout.logical.push(p);
                }
            }
            GateOp::Measure { qubits, register, .. } => {
                cregs.push((*register, qubits.len()));
                for (j, q) in qubits.iter().enumerate() {
                    let _ = writeln!(body, "measure q[{}] -> c{register}[{j}];", layout.phys(*q));
                }
            }
            GateOp::Discard { qubits, register } => {
                let w = qubits.len();
                for (j, q) in qubits.iter().enumerate() {
                    let p = layout.phys(*q);
                    layout.reset_from[p] = Some((*register, w, j));
                    layout.free.insert(p);
                }
                let mut sorted = qubits.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                for q in sorted {
                    layout.logical.remove(q);
                }
            }
            GateOp::CondX { qubit, register, value } => {
                let _ = writeln!(body, "if(c{register}=={value}) x q[{}];", layout.phys(*qubit));
            }
            GateOp::LabelRestore { qubits, register } => {
                let Some(k) = bind.label else {
                    bail!(Export, "label restore needs a bound label");
                };
                let w = qubits.len();
                if k >= 1 << w {
                    bail!(Export, "label {k} does not fit in {w} qubit(s)");
                }
                cregs.push((*register, w));
                for (j, q) in qubits.iter().enumerate() {
                    let _ = writeln!(body, "measure q[{}] -> c{register}[{j}];", layout.phys(*q));
                }
                for (j, q) in qubits.iter().enumerate() {
                    let want = ((k >> (w - 1 - j)) & 1) as u8;
                    conditional_flip(&mut body, *register, w, j, want, layout.phys(*q));
                }
            }
            GateOp::Prepare { data, label } => {
                let Some(input) = bind.input else {
                    bail!(Export, "state preparation needs bound input amplitudes");
                };
                let pd: Vec<usize> = data.iter().map(|&q| layout.phys(q)).collect();
                let pl: Vec<usize> = label.iter().map(|&q| layout.phys(q)).collect();
                for g in lower_state_prep(&pd, &pl, input, bind.label.unwrap_or(0))? {
                    let _ = match g {
                        PrepGate::Ry(q, a) => writeln!(body, "ry({}) q[{q}];", angle(a)),
                        PrepGate::Rz(q, a) => writeln!(body, "rz({}) q[{q}];", angle(a)),
                        PrepGate::Cx(c, t) => writeln!(body, "cx q[{c}],q[{t}];"),
                        PrepGate::X(q) => writeln!(body, "x q[{q}];"),
                    };
                }
            }
        }
    }

    let mut out_bits = 0;
    if bind.measure_output {
        let data: Vec<usize> = (circuit.n_label()..layout.logical.len()).collect();
        out_bits = data.len();
        for (j, q) in data.into_iter().enumerate() {
            let _ = writeln!(body, "measure q[{}] -> out[{j}];", layout.phys(q));
        }
    }

    let mut text = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(text, "qreg q[{}];", layout.width);
    cregs.sort_unstable();
    for (reg, w) in cregs {
        let _ = writeln!(text, "creg c{reg}[{w}];");
    }
    if out_bits > 0 {
        let _ = writeln!(text, "creg out[{out_bits}];");
    }
    text.push_str(&body);
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_circuit, build_hardware_adapted, AnsatzConfig, Variant};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn single_rotation_golden() {
        let c = CircuitSpec::new(
            1,
            0,
            vec![GateOp::Rotation {
                qubit: 0,
                axis: Axis::X,
                param: 0,
            }],
        )
        .unwrap();
        let text = export_qasm(
            &c,
            &ExportBindings {
                params: &[FRAC_PI_2],
                ..Default::default()
            },
        )
        .unwrap();
        let golden = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nrx(1.57079632679) q[0];\n";
        assert_eq!(text, golden);
    }

    #[test]
    fn unbound_values_rejected() {
        let c = build_hardware_adapted().unwrap();
        let params = vec![0.1; c.param_count()];
        let input = [Complex64::new(0.5, 0.0); 4];
        let short = ExportBindings {
            params: &params[1..],
            input: Some(&input),
            label: Some(0),
            measure_output: false,
        };
        assert!(matches!(export_qasm(&c, &short), Err(crate::Error::Export(_))));
        let no_input = ExportBindings {
            params: &params,
            label: Some(0),
            ..Default::default()
        };
        assert!(export_qasm(&c, &no_input).is_err());
        let no_label = ExportBindings {
            params: &params,
            input: Some(&input),
            ..Default::default()
        };
        assert!(export_qasm(&c, &no_label).is_err());
    }

    #[test]
    fn hardware_export_counts_and_determinism() {
        let c = build_hardware_adapted().unwrap();
        let params: Vec<f64> = (0..c.param_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        let input = [
            Complex64::new(0.3, -0.2),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.2, 0.6),
            Complex64::new(0.1, 0.4),
        ];
        let bind = ExportBindings {
            params: &params,
            input: Some(&input),
            label: Some(1),
            measure_output: true,
        };
        let text = export_qasm(&c, &bind).unwrap();
        assert_eq!(text.matches("cx ").count(), 37);
        assert!(text.contains("qreg q[4];"));
        assert_eq!(text.matches("measure ").count(), 6 + 2);
        assert_eq!(export_qasm(&c, &bind).unwrap(), text);
    }

    #[test]
    fn bottleneck_reuses_freed_qubits() {
        let cfg = AnsatzConfig {
            variant: Variant::Bottleneck,
            ..AnsatzConfig::reverse_bottleneck(3, 0, [1, 1, 1])
        };
        let c = build_circuit(&cfg).unwrap();
        let params = vec![0.0; c.param_count()];
        let text = export_qasm(
            &c,
            &ExportBindings {
                params: &params,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(text.contains("qreg q[3];"));
        assert!(text.contains("if(c0==1) x q[0];"));
    }
}
