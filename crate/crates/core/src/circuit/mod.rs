//! Circuit representation, text format and structural comparison.
//!
//! A circuit is a flat instruction list split into moments by `Tick`.
//! Measurement results are numbered in emission order (`record`), and
//! detectors / the observable are parities over those records.

mod builder;
mod regions;

pub use builder::{build_injection_circuit, build_noisy_injection_circuit, schedule_round, unmirrored_flags, RoundPlan};
pub use regions::{assign_regions, InitMethod, InitState, Region, RegionAssignment};

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{ChannelDistribution, ChannelLabel};
use crate::pauli::{Basis, Pauli, PauliPair};

/// Which logical parity the final readout tests. A Z-parity run detects
/// logical X flips (estimates `E_X`) and an X-parity run detects Z flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RunBasis {
    ZRun,
    XRun,
}

impl RunBasis {
    pub const BOTH: [RunBasis; 2] = [RunBasis::ZRun, RunBasis::XRun];

    pub fn basis(self) -> Basis {
        match self {
            RunBasis::ZRun => Basis::Z,
            RunBasis::XRun => Basis::X,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RunBasis::ZRun => "z",
            RunBasis::XRun => "x",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "z" | "Z" => Some(RunBasis::ZRun),
            "x" | "X" => Some(RunBasis::XRun),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorClass {
    StabilizerCompare,
    FlagCheck,
    FinalReadout,
}

impl DetectorClass {
    fn name(self) -> &'static str {
        match self {
            DetectorClass::StabilizerCompare => "stab",
            DetectorClass::FlagCheck => "flag",
            DetectorClass::FinalReadout => "final",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "stab" => Some(DetectorClass::StabilizerCompare),
            "flag" => Some(DetectorClass::FlagCheck),
            "final" => Some(DetectorClass::FinalReadout),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorInfo {
    pub stage: Stage,
    pub class: DetectorClass,
    /// Stage-local round, starting at 1; final readout detectors use `d2 + 1`.
    pub round: usize,
    /// Syndrome or flag qubit whose measurement the detector checks.
    pub qubit: usize,
}

impl DetectorInfo {
    /// Stage-I detectors are post-selection gates.
    pub fn post_select(&self) -> bool {
        self.stage == Stage::I
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    ResetZ(usize),
    Hadamard(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    MeasureZ { qubit: usize, record: usize },
    Noise1 { qubit: usize, channel: usize },
    Noise2 { a: usize, b: usize, channel: usize },
    ReadoutFlip { record: usize, probability: f64 },
    Detector { index: usize, records: Vec<usize> },
    Observable { records: Vec<usize> },
    Tick,
}

impl Instruction {
    pub fn is_gate(&self) -> bool {
        matches!(
            self,
            Instruction::ResetZ(_)
                | Instruction::Hadamard(_)
                | Instruction::Cnot(..)
                | Instruction::Cz(..)
                | Instruction::MeasureZ { .. }
        )
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Instruction::ResetZ(q) | Instruction::Hadamard(q) => vec![q],
            Instruction::Cnot(a, b) | Instruction::Cz(a, b) => vec![a, b],
            Instruction::MeasureZ { qubit, .. } | Instruction::Noise1 { qubit, .. } => vec![qubit],
            Instruction::Noise2 { a, b, .. } => vec![a, b],
            _ => Vec::new(),
        }
    }
}

/// A Pauli channel ready for sampling: the labels with nonzero probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTable {
    pub outcomes: Vec<(ChannelLabel, f64)>,
}

impl ChannelTable {
    pub fn from_distribution(d: &ChannelDistribution<f64>) -> Self {
        ChannelTable { outcomes: d.support.iter().filter(|(_, p)| *p > 0.0).cloned().collect() }
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: usize,
    pub instructions: Vec<Instruction>,
    pub record_count: usize,
    pub detectors: Vec<DetectorInfo>,
    pub observable_basis: Option<RunBasis>,
    /// Empty until noise is attached.
    pub channels: Vec<ChannelTable>,
    pub data_qubits: Vec<usize>,
    pub magic_qubit: Option<usize>,
}

impl Circuit {
    pub fn is_noisy(&self) -> bool {
        !self.channels.is_empty()
    }

    pub fn detector_count(&self) -> usize {
        self.detectors.len()
    }

    pub fn stage_one_detectors(&self) -> impl Iterator<Item = usize> + '_ {
        self.detectors.iter().enumerate().filter(|(_, d)| d.stage == Stage::I).map(|(i, _)| i)
    }

    pub fn stage_two_detectors(&self) -> impl Iterator<Item = usize> + '_ {
        self.detectors.iter().enumerate().filter(|(_, d)| d.stage == Stage::II).map(|(i, _)| i)
    }

    /// Instruction index of the first Stage-II operation, i.e. the first
    /// instruction after the last Stage-I detector.
    pub fn stage_two_start(&self) -> usize {
        let mut last = 0;
        for (k, inst) in self.instructions.iter().enumerate() {
            if let Instruction::Detector { index, .. } = inst {
                if self.detectors[*index].stage == Stage::I {
                    last = k + 1;
                }
            }
        }
        last
    }

    pub fn moments(&self) -> Vec<&[Instruction]> {
        self.instructions.split(|i| *i == Instruction::Tick).collect()
    }

    pub fn count_where(&self, f: impl Fn(&Instruction) -> bool) -> usize {
        self.instructions.iter().filter(|i| f(i)).count()
    }

    /// Noise locations: Noise1, Noise2 and ReadoutFlip instructions.
    pub fn noise_location_count(&self) -> usize {
        self.count_where(|i| {
            matches!(i, Instruction::Noise1 { .. } | Instruction::Noise2 { .. } | Instruction::ReadoutFlip { .. })
        })
    }

    /// Rename qubits through `map` (indexed by old id).
    pub fn relabel(&self, map: &[usize]) -> Circuit {
        let m = |q: usize| map[q];
        let instructions = self
            .instructions
            .iter()
            .map(|inst| match inst.clone() {
                Instruction::ResetZ(q) => Instruction::ResetZ(m(q)),
                Instruction::Hadamard(q) => Instruction::Hadamard(m(q)),
                Instruction::Cnot(a, b) => Instruction::Cnot(m(a), m(b)),
                Instruction::Cz(a, b) => Instruction::Cz(m(a), m(b)),
                Instruction::MeasureZ { qubit, record } => Instruction::MeasureZ { qubit: m(qubit), record },
                Instruction::Noise1 { qubit, channel } => Instruction::Noise1 { qubit: m(qubit), channel },
                Instruction::Noise2 { a, b, channel } => Instruction::Noise2 { a: m(a), b: m(b), channel },
                other => other,
            })
            .collect();
        let mut detectors = self.detectors.clone();
        for d in &mut detectors {
            d.qubit = m(d.qubit);
        }
        let mut data_qubits: Vec<usize> = self.data_qubits.iter().map(|&q| m(q)).collect();
        data_qubits.sort_unstable();
        Circuit {
            instructions,
            detectors,
            data_qubits,
            magic_qubit: self.magic_qubit.map(m),
            ..self.clone()
        }
    }
}

/// Canonical form of one moment's operations for order-insensitive comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum MomentOp {
    Reset(usize),
    H(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    Noise1(usize, usize),
    Noise2(usize, usize, usize),
    Measure(usize),
    Flip(usize, u64),
}

/// Whether `a` equals `b` once both are read moment by moment, with the order
/// of operations inside a moment ignored and measurement records matched by
/// the qubit they measure. Detectors and the observable are compared as
/// sets of record sets together with their metadata.
pub fn circuits_equivalent(a: &Circuit, b: &Circuit) -> bool {
    if a.qubit_count != b.qubit_count || a.record_count != b.record_count || a.channels != b.channels {
        return false;
    }
    let (ma, mb) = (a.moments(), b.moments());
    if ma.len() != mb.len() {
        return false;
    }
    // record in b for each record in a
    let mut rec_map: HashMap<usize, usize> = HashMap::new();
    for (xa, xb) in ma.iter().zip(&mb) {
        let mut qa: BTreeMap<usize, usize> = BTreeMap::new();
        let mut qb: BTreeMap<usize, usize> = BTreeMap::new();
        let canon = |ops: &[Instruction], recs: &mut BTreeMap<usize, usize>| -> Option<Vec<MomentOp>> {
            let mut out = Vec::new();
            let mut rec_qubit: HashMap<usize, usize> = HashMap::new();
            for inst in ops {
                out.push(match *inst {
                    Instruction::ResetZ(q) => MomentOp::Reset(q),
                    Instruction::Hadamard(q) => MomentOp::H(q),
                    Instruction::Cnot(c, t) => MomentOp::Cx(c, t),
                    Instruction::Cz(x, y) => MomentOp::Cz(x.min(y), x.max(y)),
                    Instruction::Noise1 { qubit, channel } => MomentOp::Noise1(qubit, channel),
                    Instruction::Noise2 { a, b, channel } => MomentOp::Noise2(a, b, channel),
                    Instruction::MeasureZ { qubit, record } => {
                        if recs.insert(qubit, record).is_some() {
                            return None;
                        }
                        rec_qubit.insert(record, qubit);
                        MomentOp::Measure(qubit)
                    }
                    Instruction::ReadoutFlip { record, probability } => {
                        MomentOp::Flip(*rec_qubit.get(&record)?, probability.to_bits())
                    }
                    Instruction::Detector { .. } | Instruction::Observable { .. } | Instruction::Tick => continue,
                });
            }
            out.sort();
            Some(out)
        };
        let (Some(ca), Some(cb)) = (canon(xa, &mut qa), canon(xb, &mut qb)) else {
            return false;
        };
        if ca != cb {
            return false;
        }
        for (q, ra) in qa {
            rec_map.insert(ra, qb[&q]);
        }
    }
    let parity_sets = |c: &Circuit, map: Option<&HashMap<usize, usize>>| {
        let mut dets: Vec<(Vec<usize>, (Stage, DetectorClass, usize, usize))> = Vec::new();
        let mut obs: Vec<Vec<usize>> = Vec::new();
        for inst in &c.instructions {
            let translate = |records: &[usize]| {
                let mut v: Vec<usize> = records.iter().map(|r| map.map_or(*r, |m| m[r])).collect();
                v.sort_unstable();
                v
            };
            match inst {
                Instruction::Detector { index, records } => {
                    let d = c.detectors[*index];
                    dets.push((translate(records), (d.stage, d.class, d.round, d.qubit)));
                }
                Instruction::Observable { records } => obs.push(translate(records)),
                _ => {}
            }
        }
        dets.sort();
        obs.sort();
        (dets, obs)
    };
    parity_sets(a, Some(&rec_map)) == parity_sets(b, None) && a.observable_basis == b.observable_basis
}

fn label_text(l: ChannelLabel) -> String {
    l.to_string()
}

fn parse_label(s: &str) -> Option<ChannelLabel> {
    let chars: Vec<char> = s.chars().collect();
    match chars.as_slice() {
        [a] => Pauli::parse(*a).map(ChannelLabel::One),
        [a, b] => Some(ChannelLabel::Two(PauliPair(Pauli::parse(*a)?, Pauli::parse(*b)?))),
        _ => None,
    }
}

fn stage_text(s: Stage) -> &'static str {
    match s {
        Stage::I => "I",
        Stage::II => "II",
    }
}

/// Line-per-instruction text form. Header lines describe the qubit count,
/// data/magic qubits and channel tables; an empty circuit dumps to "".
pub fn dump_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    if c.qubit_count > 0 {
        let _ = writeln!(out, "QUBITS {}", c.qubit_count);
    }
    if !c.data_qubits.is_empty() {
        let ids: Vec<String> = c.data_qubits.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(out, "DATA {}", ids.join(" "));
    }
    if let Some(m) = c.magic_qubit {
        let _ = writeln!(out, "MAGIC {m}");
    }
    if let Some(b) = c.observable_basis {
        let _ = writeln!(out, "BASIS {}", b.name());
    }
    for (k, ch) in c.channels.iter().enumerate() {
        let _ = write!(out, "CHANNEL {k}");
        for (l, p) in &ch.outcomes {
            let _ = write!(out, " {}:{:?}", label_text(*l), p);
        }
        out.push('\n');
    }
    for inst in &c.instructions {
        let _ = match inst {
            Instruction::ResetZ(q) => writeln!(out, "R {q}"),
            Instruction::Hadamard(q) => writeln!(out, "H {q}"),
            Instruction::Cnot(a, b) => writeln!(out, "CX {a} {b}"),
            Instruction::Cz(a, b) => writeln!(out, "CZ {a} {b}"),
            Instruction::MeasureZ { qubit, record } => writeln!(out, "M {qubit} {record}"),
            Instruction::Noise1 { qubit, channel } => writeln!(out, "N1 {qubit} {channel}"),
            Instruction::Noise2 { a, b, channel } => writeln!(out, "N2 {a} {b} {channel}"),
            Instruction::ReadoutFlip { record, probability } => writeln!(out, "RF {record} {probability:?}"),
            Instruction::Detector { index, records } => {
                let d = c.detectors[*index];
                let recs: Vec<String> = records.iter().map(|r| r.to_string()).collect();
                writeln!(
                    out,
                    "DET {index} {} {} {} {} : {}",
                    stage_text(d.stage),
                    d.class.name(),
                    d.round,
                    d.qubit,
                    recs.join(" ")
                )
            }
            Instruction::Observable { records } => {
                let recs: Vec<String> = records.iter().map(|r| r.to_string()).collect();
                writeln!(out, "OBS : {}", recs.join(" "))
            }
            Instruction::Tick => writeln!(out, "TICK"),
        };
    }
    out
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut c = Circuit::default();
    let mut detectors: BTreeMap<usize, DetectorInfo> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = match line.split_once(" : ") {
            Some((h, t)) => (h, Some(t)),
            None => (line.strip_suffix(" :").unwrap_or(line), line.ends_with(" :").then_some("")),
        };
        let toks: Vec<&str> = head.split_whitespace().collect();
        let num = |k: usize| -> Result<usize> {
            toks.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| err("expected integer"))
        };
        let records = || -> Result<Vec<usize>> {
            tail.ok_or_else(|| err("missing record list"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err("bad record")))
                .collect()
        };
        let inst = match toks[0] {
            "QUBITS" => {
                c.qubit_count = num(1)?;
                continue;
            }
            "DATA" => {
                c.data_qubits = (1..toks.len()).map(num).collect::<Result<_>>()?;
                continue;
            }
            "MAGIC" => {
                c.magic_qubit = Some(num(1)?);
                continue;
            }
            "BASIS" => {
                c.observable_basis = Some(toks.get(1).and_then(|b| RunBasis::parse(b)).ok_or_else(|| err("bad basis"))?);
                continue;
            }
            "CHANNEL" => {
                if num(1)? != c.channels.len() {
                    return Err(err("channels out of order"));
                }
                let mut outcomes = Vec::new();
                for t in &toks[2..] {
                    let (l, p) = t.split_once(':').ok_or_else(|| err("bad channel entry"))?;
                    let label = parse_label(l).ok_or_else(|| err("bad channel label"))?;
                    outcomes.push((label, p.parse().map_err(|_| err("bad probability"))?));
                }
                c.channels.push(ChannelTable { outcomes });
                continue;
            }
            "R" => Instruction::ResetZ(num(1)?),
            "H" => Instruction::Hadamard(num(1)?),
            "CX" => Instruction::Cnot(num(1)?, num(2)?),
            "CZ" => Instruction::Cz(num(1)?, num(2)?),
            "M" => {
                let record = num(2)?;
                c.record_count = c.record_count.max(record + 1);
                Instruction::MeasureZ { qubit: num(1)?, record }
            }
            "N1" => Instruction::Noise1 { qubit: num(1)?, channel: num(2)? },
            "N2" => Instruction::Noise2 { a: num(1)?, b: num(2)?, channel: num(3)? },
            "RF" => Instruction::ReadoutFlip {
                record: num(1)?,
                probability: toks.get(2).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad probability"))?,
            },
            "DET" => {
                let index = num(1)?;
                let stage = match toks.get(2) {
                    Some(&"I") => Stage::I,
                    Some(&"II") => Stage::II,
                    _ => return Err(err("bad stage")),
                };
                let class = toks.get(3).and_then(|t| DetectorClass::parse(t)).ok_or_else(|| err("bad class"))?;
                detectors.insert(index, DetectorInfo { stage, class, round: num(4)?, qubit: num(5)? });
                Instruction::Detector { index, records: records()? }
            }
            "OBS" => Instruction::Observable { records: records()? },
            "TICK" => Instruction::Tick,
            other => return Err(err(&format!("unknown instruction `{other}`"))),
        };
        c.instructions.push(inst);
    }
    for (k, (index, info)) in detectors.into_iter().enumerate() {
        if k != index {
            return Err(Error::Parse { line: 0, msg: format!("detector {k} missing") });
        }
        c.detectors.push(info);
    }
    Ok(c)
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump_circuit(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_circuit_dumps_empty() {
        assert_eq!(dump_circuit(&Circuit::default()), "");
        assert_eq!(parse_circuit("").unwrap(), Circuit::default());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(parse_circuit("FOO 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_circuit("R x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn small_round_trip() {
        let mut c = Circuit { qubit_count: 2, ..Default::default() };
        c.instructions = vec![
            Instruction::ResetZ(0),
            Instruction::Tick,
            Instruction::Cnot(0, 1),
            Instruction::MeasureZ { qubit: 1, record: 0 },
            Instruction::Detector { index: 0, records: vec![0] },
            Instruction::Observable { records: vec![] },
        ];
        c.record_count = 1;
        c.detectors.push(DetectorInfo { stage: Stage::I, class: DetectorClass::FlagCheck, round: 1, qubit: 1 });
        let text = dump_circuit(&c);
        let back = parse_circuit(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(dump_circuit(&back), text);
    }
}
