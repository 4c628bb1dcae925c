//! Circuit architectures: strongly entangling layers arranged as bottleneck,
//! reverse-bottleneck or plain stacks, plus the four-qubit hardware circuit.

mod exec;
mod hardware;
mod linearity;
#[cfg(test)]
pub(crate) mod oracle;
mod prep;
mod qasm;

pub use exec::{execute, execute_with, ExecOptions, Execution, LabelPolicy, MeasurementMode, NoiseModel};
pub use hardware::{build_hardware_adapted, hardware_config, HARDWARE_REPETITIONS};
pub use linearity::{induced_map, linearity_residual, Decode};
pub use prep::{lower_state_prep, PrepGate};
pub use qasm::{export_qasm, ExportBindings};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::statevec::Axis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// CNOTs `i → i+1 mod n`.
    Ring,
    /// Ring without the wrap-around CNOT.
    Line,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnotSchedule {
    Sequential,
    /// Even-control CNOTs first, then odd-control ones.
    EvenOdd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `U1(n) → measure m → U2(n−m) → add m → U3(n)`.
    Bottleneck,
    /// `U1(n) → add m → U2(n+m) → measure m → U3(n)`.
    ReverseBottleneck,
    /// Three unitary blocks on `n` qubits with no measurement; requires `m = 0`.
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureRole {
    Ancilla,
    Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_data: usize,
    pub n_label: usize,
    pub m: usize,
    pub layers: [usize; 3],
    pub variant: Variant,
    pub connectivity: Connectivity,
    pub cnot_schedule: CnotSchedule,
}

impl AnsatzConfig {
    pub fn reverse_bottleneck(n_data: usize, n_label: usize, layers: [usize; 3]) -> Self {
        Self {
            n_data,
            n_label,
            m: 1,
            layers,
            variant: Variant::ReverseBottleneck,
            connectivity: Connectivity::Ring,
            cnot_schedule: CnotSchedule::Sequential,
        }
    }

    /// Register width seen by the outer blocks.
    pub fn width(&self) -> usize {
        self.n_data + self.n_label
    }

    pub fn block_widths(&self) -> [usize; 3] {
        let n = self.width();
        match self.variant {
            Variant::Bottleneck => [n, n - self.m, n],
            Variant::ReverseBottleneck => [n, n + self.m, n],
            Variant::Plain => [n, n, n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.width();
        if self.n_data == 0 {
            bail!(Config, "ansatz needs at least one data qubit");
        }
        if n < 2 {
            bail!(Config, "ansatz needs at least two qubits, got {n}");
        }
        if self.layers.iter().any(|&l| l == 0) {
            bail!(Config, "every block needs at least one layer: {:?}", self.layers);
        }
        match self.variant {
            Variant::Plain if self.m != 0 => {
                bail!(Config, "plain ansatz has no measurements; m must be 0")
            }
            Variant::Plain => {}
            _ if self.m == 0 => bail!(Config, "measured-qubit count m must be at least 1"),
            Variant::Bottleneck if self.m >= self.n_data => {
                bail!(
                    Config,
                    "bottleneck must keep a data qubit: m={} n_data={}",
                    self.m,
                    self.n_data
                )
            }
            _ if self.m >= n => bail!(Config, "m={} must be below the register width {n}", self.m),
            _ => {}
        }
        Ok(())
    }
}

/// Number of label qubits needed for `n_labels` classes, `⌈log2 N⌉`.
pub fn label_qubits(n_labels: usize) -> usize {
    if n_labels <= 1 {
        0
    } else {
        (usize::BITS - (n_labels - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GateOp {
    Rotation {
        qubit: usize,
        axis: Axis,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Appends `count` fresh `|0⟩` qubits as least significant.
    AddAncilla {
        count: usize,
    },
    /// Measures `qubits` into classical register `register`.
    Measure {
        qubits: Vec<usize>,
        role: MeasureRole,
        register: usize,
    },
    /// Removes qubits collapsed by the measurement stored in `register`.
    Discard {
        qubits: Vec<usize>,
        register: usize,
    },
    /// Pauli X on `qubit` when `register` holds `value`.
    CondX {
        qubit: usize,
        register: usize,
        value: usize,
    },
    /// Label checkpoint; behaviour chosen at execution time by [`LabelPolicy`].
    LabelRestore {
        qubits: Vec<usize>,
        register: usize,
    },
    /// Marks state preparation of the circuit input on `data` and `label`
    /// qubits. A no-op in simulation, lowered to gates on export.
    Prepare {
        data: Vec<usize>,
        label: Vec<usize>,
    },
}

impl GateOp {
    fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::Rotation { qubit, .. } | GateOp::CondX { qubit, .. } => vec![*qubit],
            GateOp::Cnot { control, target } => vec![*control, *target],
            GateOp::AddAncilla { .. } => vec![],
            GateOp::Measure { qubits, .. } | GateOp::Discard { qubits, .. } | GateOp::LabelRestore { qubits, .. } => {
                qubits.clone()
            }
            GateOp::Prepare { data, label } => data.iter().chain(label).copied().collect(),
        }
    }
}

/// Ordered gate program with its register-width trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    ops: Vec<GateOp>,
    trajectory: Vec<usize>,
    param_count: usize,
    n_label: usize,
    n_registers: usize,
}

impl CircuitSpec {
    /// Validates `ops` against a register of `entry_width` qubits.
    pub fn new(entry_width: usize, n_label: usize, ops: Vec<GateOp>) -> Result<Self> {
        let mut width = entry_width;
        let mut trajectory = Vec::with_capacity(ops.len() + 1);
        trajectory.push(width);
        let mut params: Vec<usize> = Vec::new();
        let mut registers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, op) in ops.iter().enumerate() {
            let qs = op.qubits();
            if let Some(&q) = qs.iter().find(|&&q| q >= width) {
                bail!(Config, "op {idx} touches qubit {q} of a {width}-qubit register");
            }
            for (k, q) in qs.iter().enumerate() {
                if qs[..k].contains(q) {
                    bail!(Config, "op {idx} lists qubit {q} twice");
                }
            }
            match op {
                GateOp::Rotation { param, .. } => params.push(*param),
                GateOp::AddAncilla { count } => {
                    if *count == 0 {
                        bail!(Config, "op {idx} adds zero ancillas");
                    }
                    width += count;
                }
                GateOp::Measure { qubits, register, .. } | GateOp::LabelRestore { qubits, register } => {
                    if qubits.is_empty() {
                        bail!(Config, "op {idx} measures no qubits");
                    }
                    if registers.insert(*register, qubits.clone()).is_some() {
                        bail!(Config, "op {idx} reuses classical register {register}");
                    }
                }
                GateOp::Discard { qubits, register } => {
                    if registers.get(register) != Some(qubits) {
                        bail!(Config, "op {idx} discards qubits not measured into register {register}");
                    }
                    if qubits.len() >= width {
                        bail!(Config, "op {idx} discards the whole register");
                    }
                    width -= qubits.len();
                }
                GateOp::CondX { register, .. } => {
                    if !registers.contains_key(register) {
                        bail!(Config, "op {idx} conditions on unset register {register}");
                    }
                }
                GateOp::Cnot { .. } | GateOp::Prepare { .. } => {}
            }
            trajectory.push(width);
        }
        params.sort_unstable();
        if params.iter().enumerate().any(|(i, &p)| i != p) {
            bail!(Config, "rotation parameters must be dense 0..P-1, each used once");
        }
        let n_registers = registers.keys().next_back().map_or(0, |r| r + 1);
        Ok(Self {
            ops,
            trajectory,
            param_count: params.len(),
            n_label,
            n_registers,
        })
    }

    /// Runs `parts` back to back, renumbering parameters and registers.
    pub fn concat(parts: &[CircuitSpec]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| crate::Error::Config("nothing to concatenate".into()))?;
        let mut ops = Vec::new();
        let (mut p_off, mut r_off) = (0, 0);
        for part in parts {
            ops.extend(part.ops.iter().map(|op| op.offset(p_off, r_off)));
            p_off += part.param_count;
            r_off += part.n_registers;
        }
        Self::new(first.entry_width(), first.n_label, ops)
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Register width before the first op and after each op.
    pub fn qubit_trajectory(&self) -> &[usize] {
        &self.trajectory
    }

    pub fn entry_width(&self) -> usize {
        self.trajectory[0]
    }

    pub fn exit_width(&self) -> usize {
        *self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn max_width(&self) -> usize {
        self.trajectory.iter().copied().max().unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn n_label(&self) -> usize {
        self.n_label
    }

    pub fn n_registers(&self) -> usize {
        self.n_registers
    }

    pub fn cnot_count(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                GateOp::Cnot { .. } => 1,
                GateOp::Prepare { data, .. } => prep::prep_cnot_cost(data.len()),
                _ => 0,
            })
            .sum()
    }

    pub fn cnots(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ops.iter().filter_map(|op| match op {
            GateOp::Cnot { control, target } => Some((*control, *target)),
            _ => None,
        })
    }

    /// `true` when some ancilla measurement is left to the measurement mode.
    pub fn has_ancilla_measurement(&self) -> bool {
        self.ops.iter().any(|op| {
            matches!(
                op,
                GateOp::Measure {
                    role: MeasureRole::Ancilla,
                    ..
                }
            )
        })
    }

    /// Gate-kind tallies of the exported program: `rx`, `ry`, `rz`, `cx`,
    /// `measure` (one per measured qubit).
    pub fn gate_histogram(&self) -> BTreeMap<&'static str, usize> {
        let mut h = BTreeMap::new();
        for op in &self.ops {
            match op {
                GateOp::Rotation { axis, .. } => {
                    *h.entry(match axis {
                        Axis::X => "rx",
                        Axis::Y => "ry",
                        Axis::Z => "rz",
                    })
                    .or_default() += 1
                }
                GateOp::Cnot { .. } => *h.entry("cx").or_default() += 1,
                GateOp::Measure { qubits, .. } | GateOp::LabelRestore { qubits, .. } => {
                    *h.entry("measure").or_default() += qubits.len()
                }
                GateOp::Prepare { data, .. } => {
                    for (kind, n) in prep::prep_histogram(data.len()) {
                        *h.entry(kind).or_default() += n;
                    }
                }
                _ => {}
            }
        }
        h
    }
}

impl GateOp {
    fn offset(&self, p: usize, r: usize) -> GateOp {
        let mut op = self.clone();
        match &mut op {
            GateOp::Rotation { param, .. } => *param += p,
            GateOp::Measure { register, .. }
            | GateOp::Discard { register, .. }
            | GateOp::CondX { register, .. }
            | GateOp::LabelRestore { register, .. } => *register += r,
            _ => {}
        }
        op
    }
}

fn layer_cnots(qubits: &[usize], connectivity: Connectivity, schedule: CnotSchedule) -> Vec<(usize, usize)> {
    let n = qubits.len();
    if n < 2 {
        return Vec::new();
    }
    let pairs = match connectivity {
        Connectivity::Ring => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        Connectivity::Line => (0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>(),
    };
    let ordered: Vec<(usize, usize)> = match schedule {
        CnotSchedule::Sequential => pairs,
        CnotSchedule::EvenOdd => {
            let (even, odd): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|(c, _)| c % 2 == 0);
            even.into_iter().chain(odd).collect()
        }
    };
    ordered.into_iter().map(|(c, t)| (qubits[c], qubits[t])).collect()
}

fn push_layer(
    ops: &mut Vec<GateOp>,
    qubits: &[usize],
    connectivity: Connectivity,
    schedule: CnotSchedule,
    next_param: &mut usize,
) {
    for &qubit in qubits {
        for axis in Axis::ALL {
            ops.push(GateOp::Rotation {
                qubit,
                axis,
                param: *next_param,
            });
            *next_param += 1;
        }
    }
    for (control, target) in layer_cnots(qubits, connectivity, schedule) {
        ops.push(GateOp::Cnot { control, target });
    }
}

fn push_block(ops: &mut Vec<GateOp>, width: usize, layers: usize, cfg: &AnsatzConfig, next_param: &mut usize) {
    let qubits: Vec<usize> = (0..width).collect();
    for _ in 0..layers {
        push_layer(ops, &qubits, cfg.connectivity, cfg.cnot_schedule, next_param);
    }
}

/// One strongly entangling layer on `n` qubits: `Rx, Ry, Rz` per qubit
/// (qubits ascending) followed by the CNOT chain. Parameters are `0..3n`.
pub fn build_entangling_layer(n: usize, connectivity: Connectivity, schedule: CnotSchedule) -> Result<Vec<GateOp>> {
    if n < 2 {
        bail!(Config, "an entangling layer needs at least two qubits, got {n}");
    }
    let mut ops = Vec::with_capacity(4 * n);
    let qubits: Vec<usize> = (0..n).collect();
    push_layer(&mut ops, &qubits, connectivity, schedule, &mut 0);
    Ok(ops)
}

pub fn build_circuit(cfg: &AnsatzConfig) -> Result<CircuitSpec> {
    cfg.validate()?;
    let n = cfg.width();
    let m = cfg.m;
    let [w1, w2, w3] = cfg.block_widths();
    let [l1, l2, l3] = cfg.layers;
    let mut ops = Vec::new();
    let mut next = 0;
    let mut register = 0;
    push_block(&mut ops, w1, l1, cfg, &mut next);
    match cfg.variant {
        Variant::Bottleneck => {
            // the first m data qubits; label qubits are never measured mid-circuit
            let measured: Vec<usize> = (cfg.n_label..cfg.n_label + m).collect();
            ops.push(GateOp::Measure {
                qubits: measured.clone(),
                role: MeasureRole::Ancilla,
                register,
            });
            ops.push(GateOp::Discard {
                qubits: measured,
                register,
            });
            register += 1;
            push_block(&mut ops, w2, l2, cfg, &mut next);
            ops.push(GateOp::AddAncilla { count: m });
        }
        Variant::ReverseBottleneck => {
            ops.push(GateOp::AddAncilla { count: m });
            push_block(&mut ops, w2, l2, cfg, &mut next);
            let ancillas: Vec<usize> = (n..n + m).collect();
            ops.push(GateOp::Measure {
                qubits: ancillas.clone(),
                role: MeasureRole::Ancilla,
                register,
            });
            ops.push(GateOp::Discard {
                qubits: ancillas,
                register,
            });
            register += 1;
        }
        Variant::Plain => push_block(&mut ops, w2, l2, cfg, &mut next),
    }
    push_block(&mut ops, w3, l3, cfg, &mut next);
    if cfg.n_label > 0 {
        ops.push(GateOp::LabelRestore {
            qubits: (0..cfg.n_label).collect(),
            register,
        });
    }
    CircuitSpec::new(n, cfg.n_label, ops)
}

/// `Σ_blocks 3 · width · layers`.
pub fn param_count(cfg: &AnsatzConfig) -> Result<usize> {
    cfg.validate()?;
    Ok(cfg.block_widths().iter().zip(cfg.layers).map(|(w, l)| 3 * w * l).sum())
}

/// Depth of the CNOT subsequence of `ops` under as-soon-as-possible moment
/// packing (each CNOT lands one moment after the latest CNOT sharing a qubit).
pub fn cnot_moments(ops: &[GateOp]) -> usize {
    let mut last: BTreeMap<usize, usize> = BTreeMap::new();
    let mut depth = 0;
    for op in ops {
        if let GateOp::Cnot { control, target } = op {
            let m = 1 + last
                .get(control)
                .copied()
                .unwrap_or(0)
                .max(last.get(target).copied().unwrap_or(0));
            last.insert(*control, m);
            last.insert(*target, m);
            depth = depth.max(m);
        }
    }
    depth
}

/// Splits `ops` into entangling layers: each run of rotations followed by
/// its CNOTs. Non-gate ops end a layer.
pub fn entangling_layers(ops: &[GateOp]) -> Vec<&[GateOp]> {
    let mut layers = Vec::new();
    let mut start = 0;
    let mut seen_cnot = false;
    for (i, op) in ops.iter().enumerate() {
        match op {
            GateOp::Rotation { .. } if seen_cnot => {
                layers.push(&ops[start..i]);
                start = i;
                seen_cnot = false;
            }
            GateOp::Rotation { .. } => {}
            GateOp::Cnot { .. } => seen_cnot = true,
            _ => {
                if seen_cnot {
                    layers.push(&ops[start..i]);
                }
                start = i + 1;
                seen_cnot = false;
            }
        }
    }
    if seen_cnot {
        layers.push(&ops[start..]);
    }
    layers
}
