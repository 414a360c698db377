//! Deterministic propagation of single inserted faults, 64 at a time.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::Frame;
use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::noise::ChannelLabel;
use crate::pauli::Pauli;

/// A fault inserted just before instruction `before` (`before ==
/// instructions.len()` means at the very end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub before: usize,
    pub paulis: Vec<(usize, Pauli)>,
    pub record_flip: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultEffect {
    /// Sorted detector indices.
    pub detectors: Vec<usize>,
    pub observable: bool,
}

impl FaultEffect {
    pub fn is_silent(&self) -> bool {
        self.detectors.is_empty() && !self.observable
    }

    pub fn is_undetected_logical(&self) -> bool {
        self.detectors.is_empty() && self.observable
    }

    /// Symmetric difference of two effects (effects compose linearly).
    pub fn combine(&self, other: &FaultEffect) -> FaultEffect {
        let a: BTreeSet<usize> = self.detectors.iter().copied().collect();
        let b: BTreeSet<usize> = other.detectors.iter().copied().collect();
        FaultEffect {
            detectors: a.symmetric_difference(&b).copied().collect(),
            observable: self.observable ^ other.observable,
        }
    }
}

fn propagate_chunk(circuit: &Circuit, faults: &[Fault]) -> Vec<FaultEffect> {
    debug_assert!(faults.len() <= 64);
    let mut order: Vec<usize> = (0..faults.len()).collect();
    order.sort_by_key(|&k| faults[k].before);
    let mut next = 0;

    let mut frame = Frame::new(circuit.qubit_count, circuit.record_count, 1);
    let mut effects = vec![FaultEffect::default(); faults.len()];
    let mut word = [0u64];
    let n = circuit.instructions.len();
    for k in 0..=n {
        while next < order.len() && faults[order[next]].before == k {
            let lane = order[next];
            let f = &faults[lane];
            for &(q, p) in &f.paulis {
                frame.apply_pauli(q, p, 0, 1 << lane);
            }
            if let Some(r) = f.record_flip {
                frame.records[r] ^= 1 << lane;
            }
            next += 1;
        }
        if k == n {
            break;
        }
        let inst = &circuit.instructions[k];
        if frame.gate(inst) {
            continue;
        }
        match inst {
            Instruction::Detector { index, records } => {
                frame.parity(records, &mut word);
                let mut bits = word[0];
                while bits != 0 {
                    effects[bits.trailing_zeros() as usize].detectors.push(*index);
                    bits &= bits - 1;
                }
            }
            Instruction::Observable { records } => {
                frame.parity(records, &mut word);
                let mut bits = word[0];
                while bits != 0 {
                    let e = &mut effects[bits.trailing_zeros() as usize];
                    e.observable ^= true;
                    bits &= bits - 1;
                }
            }
            _ => {}
        }
    }
    for e in &mut effects {
        e.detectors.sort_unstable();
    }
    effects
}

/// Noiseless propagation of many independent faults (noise instructions are
/// ignored). Results are in input order.
pub fn propagate_faults(circuit: &Circuit, faults: &[Fault]) -> Vec<FaultEffect> {
    faults.par_chunks(64).flat_map_iter(|chunk| propagate_chunk(circuit, chunk)).collect()
}

/// The fault that `label` at instruction `location` stands for. Gates,
/// resets and noise instructions take the fault right after them,
/// measurements right before, and a readout-flip location flips its record
/// when the Pauli has an X part.
pub fn fault_at(circuit: &Circuit, location: usize, label: ChannelLabel) -> Result<Fault> {
    let inst = circuit.instructions.get(location).ok_or(Error::LocationOutOfRange(location))?;
    let fault = match (inst, label) {
        (
            Instruction::ResetZ(q) | Instruction::Hadamard(q) | Instruction::Noise1 { qubit: q, .. },
            ChannelLabel::One(p),
        ) => Fault { before: location + 1, paulis: vec![(*q, p)], record_flip: None },
        (Instruction::MeasureZ { qubit, .. }, ChannelLabel::One(p)) => {
            Fault { before: location, paulis: vec![(*qubit, p)], record_flip: None }
        }
        (
            Instruction::Cnot(a, b) | Instruction::Cz(a, b) | Instruction::Noise2 { a, b, .. },
            ChannelLabel::Two(pp),
        ) => Fault { before: location + 1, paulis: vec![(*a, pp.0), (*b, pp.1)], record_flip: None },
        (Instruction::ReadoutFlip { record, .. }, ChannelLabel::One(p)) => {
            Fault { before: location + 1, paulis: vec![], record_flip: p.x_bit().then_some(*record) }
        }
        _ => return Err(Error::NotAFaultLocation(location)),
    };
    Ok(fault)
}

/// Insert `label` at `location` and propagate; see [`fault_at`].
pub fn propagate_fault(circuit: &Circuit, location: usize, label: ChannelLabel) -> Result<FaultEffect> {
    let fault = fault_at(circuit, location, label)?;
    Ok(propagate_chunk(circuit, std::slice::from_ref(&fault)).remove(0))
}

/// Every outcome with nonzero probability of every noise instruction, as
/// `(location, label, fault)`. A readout flip is reported as `One(X)`.
pub fn single_faults(circuit: &Circuit) -> Vec<(usize, ChannelLabel, Fault)> {
    let mut out = Vec::new();
    for (k, inst) in circuit.instructions.iter().enumerate() {
        let labels: Vec<ChannelLabel> = match inst {
            Instruction::Noise1 { channel, .. } | Instruction::Noise2 { channel, .. } => {
                circuit.channels[*channel].outcomes.iter().filter(|(_, p)| *p > 0.0).map(|(l, _)| *l).collect()
            }
            Instruction::ReadoutFlip { probability, .. } if *probability > 0.0 => vec![ChannelLabel::One(Pauli::X)],
            _ => continue,
        };
        for label in labels {
            let fault = fault_at(circuit, k, label).expect("noise instruction is a fault location");
            out.push((k, label, fault));
        }
    }
    out
}

/// Instruction index just before the first two-qubit gate or measurement
/// touching `q`, i.e. the end of its initialization.
pub(crate) fn init_boundary(circuit: &Circuit, q: usize) -> Option<usize> {
    circuit.instructions.iter().position(|inst| match *inst {
        Instruction::Cnot(a, b) | Instruction::Cz(a, b) => a == q || b == q,
        Instruction::MeasureZ { qubit, .. } => qubit == q,
        _ => false,
    })
}

/// Data qubits (other than the magic qubit) prepared in Stage I for which a
/// single Pauli right after initialization fires no detector but flips the
/// observable.
pub fn find_blind_qubits(circuit: &Circuit) -> BTreeSet<usize> {
    let stage_two = circuit.stage_two_start();
    let mut faults = Vec::new();
    let mut owners = Vec::new();
    for &q in &circuit.data_qubits {
        if Some(q) == circuit.magic_qubit {
            continue;
        }
        let Some(k) = init_boundary(circuit, q) else { continue };
        if k >= stage_two {
            continue;
        }
        for p in Pauli::NON_IDENTITY {
            faults.push(Fault { before: k, paulis: vec![(q, p)], record_flip: None });
            owners.push(q);
        }
    }
    propagate_faults(circuit, &faults)
        .into_iter()
        .zip(owners)
        .filter(|(e, _)| e.is_undetected_logical())
        .map(|(_, q)| q)
        .collect()
}
