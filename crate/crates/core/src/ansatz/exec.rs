//! Circuit execution against the state-vector simulator.

use num_complex::Complex64;
use rand::RngCore;

use super::{CircuitSpec, GateOp, MeasureRole};
use crate::error::{bail, Error, Result};
use crate::statevec::{
    self, add_ancilla, discard_qubits, noise::depolarize_in_place, postselect, readout_flip, Branch, BranchEnsemble,
    Pauli, QuantumState, BRANCH_CUTOFF,
};

/// How mid-circuit ancilla measurements are realised.
pub enum MeasurementMode<'r> {
    /// Keep every outcome as a weighted branch. Consumes no randomness.
    Ensemble,
    /// Draw one outcome per measurement.
    Sample(&'r mut dyn RngCore),
    /// Project every ancilla measurement onto `outcome` and renormalize.
    Postselect(usize),
    /// Draw an outcome and fail with [`Error::Rejected`] unless it equals `outcome`.
    BranchSelect { rng: &'r mut dyn RngCore, outcome: usize },
}

impl MeasurementMode<'_> {
    fn rng(&mut self) -> Option<&mut dyn RngCore> {
        match self {
            MeasurementMode::Sample(rng) | MeasurementMode::BranchSelect { rng, .. } => Some(&mut **rng),
            _ => None,
        }
    }
}

/// Treatment of label qubits at each label checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelPolicy {
    /// Leave the label register untouched.
    None,
    /// Project the label register onto `|k⟩`.
    Postselect(usize),
    /// Measure the label, then flip the bits that differ from `k`.
    Restore(usize),
}

/// Trajectory noise: depolarizing on both qubits after every CNOT and
/// symmetric readout flips on every recorded classical bit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseModel {
    pub depolarizing: f64,
    pub readout: f64,
}

impl NoiseModel {
    pub fn is_noiseless(&self) -> bool {
        self.depolarizing == 0.0 && self.readout == 0.0
    }
}

pub struct ExecOptions<'r> {
    pub mode: MeasurementMode<'r>,
    pub label: LabelPolicy,
    pub noise: NoiseModel,
}

impl<'r> ExecOptions<'r> {
    pub fn new(mode: MeasurementMode<'r>, label: LabelPolicy) -> Self {
        Self {
            mode,
            label,
            noise: NoiseModel::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub ensemble: BranchEnsemble,
    /// Classical register values of the first branch (the only one outside
    /// ensemble mode). Readout noise is already applied.
    pub registers: Vec<Option<usize>>,
    /// Ancilla measurements performed.
    pub ancilla_measurements: usize,
    /// Product of label postselection probabilities along the run.
    pub label_acceptance: f64,
}

#[derive(Clone)]
struct Track {
    p: f64,
    state: QuantumState,
    /// register → recorded outcome (possibly misread)
    regs: Vec<Option<usize>>,
    /// register → actual collapsed outcome
    actual: Vec<Option<usize>>,
}

fn bits(value: usize, width: usize) -> Vec<u8> {
    (0..width).map(|k| ((value >> (width - 1 - k)) & 1) as u8).collect()
}

fn value(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b != 0))
}

/// Runs `circuit` in the given mode and returns the output ensemble.
pub fn execute(
    circuit: &CircuitSpec,
    params: &[f64],
    input: &QuantumState,
    mode: MeasurementMode<'_>,
    label: LabelPolicy,
) -> Result<BranchEnsemble> {
    Ok(execute_with(circuit, params, input, ExecOptions::new(mode, label))?.ensemble)
}

pub fn execute_with(
    circuit: &CircuitSpec,
    params: &[f64],
    input: &QuantumState,
    mut opts: ExecOptions<'_>,
) -> Result<Execution> {
    if params.len() != circuit.param_count() {
        bail!(
            Shape,
            "{} parameters for a circuit expecting {}",
            params.len(),
            circuit.param_count()
        );
    }
    if input.n_qubits() != circuit.entry_width() {
        bail!(
            Shape,
            "{}-qubit input for a {}-qubit circuit",
            input.n_qubits(),
            circuit.entry_width()
        );
    }
    let noisy = !opts.noise.is_noiseless();
    if noisy && opts.mode.rng().is_none() {
        bail!(Config, "noise simulation needs a sampling measurement mode");
    }
    if let LabelPolicy::Postselect(k) | LabelPolicy::Restore(k) = opts.label {
        if k >= 1 << circuit.n_label() {
            bail!(Label, "label {k} does not fit in {} label qubit(s)", circuit.n_label());
        }
    }

    let n_reg = circuit.n_registers();
    let mut tracks = vec![Track {
        p: 1.0,
        state: input.clone(),
        regs: vec![None; n_reg],
        actual: vec![None; n_reg],
    }];
    let mut ancilla_measurements = 0;
    let mut label_acceptance = 1.0;

    for op in circuit.ops() {
        match op {
            GateOp::Rotation { qubit, axis, param } => {
                for t in &mut tracks {
                    t.state.rotate(*qubit, *axis, params[*param])?;
                }
            }
            GateOp::Cnot { control, target } => {
                for t in &mut tracks {
                    t.state.cnot(*control, *target)?;
                }
                if noisy && opts.noise.depolarizing > 0.0 {
                    let rng = opts.mode.rng().expect("checked above");
                    for t in &mut tracks {
                        depolarize_in_place(&mut t.state, *control, opts.noise.depolarizing, rng)?;
                        depolarize_in_place(&mut t.state, *target, opts.noise.depolarizing, rng)?;
                    }
                }
            }
            GateOp::AddAncilla { count } => {
                for t in &mut tracks {
                    t.state = add_ancilla(&t.state, *count)?;
                }
            }
            GateOp::Measure { qubits, role, register } => {
                debug_assert_eq!(*role, MeasureRole::Ancilla);
                tracks = match measure(tracks, qubits, *register, &mut opts, false) {
                    Err(Error::Rejected { .. }) => {
                        return Err(Error::Rejected {
                            accepted: ancilla_measurements,
                        })
                    }
                    other => other?,
                };
                ancilla_measurements += 1;
            }
            GateOp::Discard { qubits, register } => {
                for t in &mut tracks {
                    let outcome = t.actual[*register].expect("validated register");
                    t.state = discard_qubits(&t.state, qubits, &bits(outcome, qubits.len()))?;
                }
            }
            GateOp::CondX { qubit, register, value } => {
                for t in &mut tracks {
                    if t.regs[*register] == Some(*value) {
                        t.state.pauli(*qubit, Pauli::X)?;
                    }
                }
            }
            GateOp::LabelRestore { qubits, register } => match opts.label {
                LabelPolicy::None => {}
                LabelPolicy::Postselect(k) => {
                    let target = bits(k, qubits.len());
                    let mut kept = Vec::with_capacity(tracks.len());
                    let mut accepted = 0.0;
                    for mut t in tracks {
                        let mass = label_mass(&t.state, qubits, k);
                        if mass * t.p < BRANCH_CUTOFF * 1e-3 {
                            continue;
                        }
                        accepted += t.p * mass;
                        t.p *= mass;
                        t.state = postselect(&t.state, qubits, &target)?;
                        t.regs[*register] = Some(k);
                        t.actual[*register] = Some(k);
                        kept.push(t);
                    }
                    if kept.is_empty() {
                        bail!(Postselect, "label {k} has vanishing probability");
                    }
                    label_acceptance *= accepted;
                    tracks = renormalize(kept)?;
                }
                LabelPolicy::Restore(k) => {
                    tracks = measure(tracks, qubits, *register, &mut opts, true)?;
                    for t in &mut tracks {
                        let seen = bits(t.regs[*register].expect("just measured"), qubits.len());
                        let want = bits(k, qubits.len());
                        for ((q, s), w) in qubits.iter().zip(seen).zip(want) {
                            if s != w {
                                t.state.pauli(*q, Pauli::X)?;
                            }
                        }
                    }
                }
            },
            GateOp::Prepare { .. } => {}
        }
    }

    let registers = tracks[0].regs.clone();
    let ensemble = BranchEnsemble::new(
        tracks
            .into_iter()
            .map(|t| Branch {
                probability: t.p,
                state: t.state,
            })
            .collect(),
    )?;
    Ok(Execution {
        ensemble,
        registers,
        ancilla_measurements,
        label_acceptance,
    })
}

fn label_mass(s: &QuantumState, qubits: &[usize], k: usize) -> f64 {
    let masks: Vec<usize> = qubits.iter().map(|&q| s.stride(q)).collect();
    s.amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(i & m != 0)) == k)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn renormalize(mut tracks: Vec<Track>) -> Result<Vec<Track>> {
    let total: f64 = tracks.iter().map(|t| t.p).sum();
    if total <= 0.0 {
        bail!(State, "all branches vanished");
    }
    tracks.iter_mut().for_each(|t| t.p /= total);
    Ok(tracks)
}

fn measure(
    tracks: Vec<Track>,
    qubits: &[usize],
    register: usize,
    opts: &mut ExecOptions<'_>,
    is_label: bool,
) -> Result<Vec<Track>> {
    let readout = opts.noise.readout;
    match &mut opts.mode {
        MeasurementMode::Ensemble => {
            let mut out = Vec::with_capacity(tracks.len() * 2);
            for t in tracks {
                let split = statevec::measure_branches(&t.state, qubits)?;
                for b in split.into_branches() {
                    let outcome = value(&outcome_bits_of(&b.state, qubits));
                    let mut regs = t.regs.clone();
                    let mut actual = t.actual.clone();
                    regs[register] = Some(outcome);
                    actual[register] = Some(outcome);
                    out.push(Track {
                        p: t.p * b.probability,
                        state: b.state,
                        regs,
                        actual,
                    });
                }
            }
            let out: Vec<Track> = out.into_iter().filter(|t| t.p >= BRANCH_CUTOFF).collect();
            renormalize(out)
        }
        MeasurementMode::Postselect(outcome) if !is_label => {
            let target = bits(*outcome, qubits.len());
            let mut out = Vec::with_capacity(tracks.len());
            for mut t in tracks {
                let mass = label_mass(&t.state, qubits, *outcome);
                if mass < BRANCH_CUTOFF {
                    continue;
                }
                t.p *= mass;
                t.state = postselect(&t.state, qubits, &target)?;
                t.regs[register] = Some(*outcome);
                t.actual[register] = Some(*outcome);
                out.push(t);
            }
            if out.is_empty() {
                bail!(Postselect, "ancilla outcome {outcome} has vanishing probability");
            }
            renormalize(out)
        }
        MeasurementMode::Postselect(_) => {
            // label restore without randomness: keep every outcome as a branch
            let mut ensemble_opts = ExecOptions::new(MeasurementMode::Ensemble, opts.label);
            ensemble_opts.noise = opts.noise;
            measure(tracks, qubits, register, &mut ensemble_opts, is_label)
        }
        MeasurementMode::Sample(_) | MeasurementMode::BranchSelect { .. } => {
            let select = match opts.mode {
                MeasurementMode::BranchSelect { outcome, .. } if !is_label => Some(outcome),
                _ => None,
            };
            let rng: &mut dyn RngCore = match &mut opts.mode {
                MeasurementMode::Sample(rng) | MeasurementMode::BranchSelect { rng, .. } => &mut **rng,
                _ => unreachable!(),
            };
            let mut out = Vec::with_capacity(tracks.len());
            for mut t in tracks {
                let (drawn, state) = statevec::measure_sample(&t.state, qubits, rng)?;
                let actual = value(&drawn);
                if let Some(want) = select {
                    if actual != want {
                        return Err(Error::Rejected { accepted: 0 });
                    }
                }
                let seen = if readout > 0.0 {
                    value(&readout_flip(&drawn, readout, rng)?)
                } else {
                    actual
                };
                t.state = state;
                t.regs[register] = Some(seen);
                t.actual[register] = Some(actual);
                out.push(t);
            }
            Ok(out)
        }
    }
}

fn outcome_bits_of(s: &QuantumState, qubits: &[usize]) -> Vec<u8> {
    // the state is collapsed on `qubits`: read them off the first non-zero amplitude
    let (i, _) = s
        .amplitudes()
        .iter()
        .enumerate()
        .find(|(_, a)| a.norm_sqr() > 0.0)
        .unwrap_or((0, &Complex64::new(0.0, 0.0)));
    qubits.iter().map(|&q| u8::from(i & s.stride(q) != 0)).collect()
}
