//! Two-stage injection circuit compiler.
//!
//! Stage I prepares the `d1` patch (data qubits in their region bases, the
//! magic qubit in the run's proxy state) and measures its stabilizers twice;
//! every Stage-I detector is a post-selection gate. Stage II prepares the
//! extension, measures the `d2` patch `d2` times and reads every data qubit
//! out transversally in the run basis.
//!
//! A stabilizer round runs every stabilizer in parallel, leg slot by leg
//! slot. Syndromes are prepared in `|+>` and apply controlled-Paulis, except
//! all-Z stabilizers without flags, which collect parity with data-controlled
//! CNOTs onto a `|0>` syndrome. A flagged leg opens `syndrome -> hub` once per
//! round and `hub -> bridge` around its own coupling, mirrored on both sides.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Circuit, DetectorClass, DetectorInfo, Instruction, RegionAssignment, RunBasis, Stage};
use crate::error::{Error, Result};
use crate::layout::{leg_order, CodeLayout, CodeType, QubitId, QubitRole, StabilizerSpec};
use crate::noise::{attach_noise, NoiseParams};
use crate::pauli::Basis;
use crate::scalar::Scalar;

/// One stabilizer round as moments; `MeasureZ` records are local indices
/// into `measured`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub moments: Vec<Vec<Instruction>>,
    pub measured: Vec<usize>,
}

fn collects_parity(s: &StabilizerSpec) -> bool {
    s.is_uniform(Basis::Z) && !s.has_routes()
}

fn plan_round(code: CodeType, stabs: &[StabilizerSpec]) -> RoundPlan {
    let order = leg_order(code);
    let slot = |l: &crate::layout::Leg| order.iter().position(|d| *d == l.direction).expect("leg direction");
    let q = |id: QubitId| id.0;

    let flags: BTreeSet<usize> = stabs.iter().flat_map(|s| s.legs.iter().flat_map(|l| l.route.iter().map(|f| f.0))).collect();
    let mut moments: Vec<Vec<Instruction>> = Vec::new();

    let mut resets: Vec<Instruction> = stabs.iter().map(|s| Instruction::ResetZ(q(s.syndrome))).collect();
    resets.extend(flags.iter().map(|&f| Instruction::ResetZ(f)));
    moments.push(resets);

    let hadamards: Vec<Instruction> =
        stabs.iter().filter(|s| !collects_parity(s)).map(|s| Instruction::Hadamard(q(s.syndrome))).collect();
    moments.push(hadamards.clone());

    let hub_links: Vec<Instruction> =
        stabs.iter().filter_map(|s| s.hub().map(|h| Instruction::Cnot(q(s.syndrome), q(h)))).collect();
    moments.push(hub_links.clone());

    for k in 0..4 {
        let mut open = Vec::new();
        let mut couple = Vec::new();
        for s in stabs {
            let collect = collects_parity(s);
            for leg in s.legs.iter().filter(|l| slot(l) == k) {
                for pair in leg.route.windows(2) {
                    open.push(Instruction::Cnot(q(pair[0]), q(pair[1])));
                }
                let near = leg.route.last().copied().unwrap_or(s.syndrome);
                couple.push(match (collect, leg.pauli) {
                    (true, _) => Instruction::Cnot(q(leg.data), q(near)),
                    (false, Basis::X) => Instruction::Cnot(q(near), q(leg.data)),
                    (false, Basis::Z) => Instruction::Cz(q(near), q(leg.data)),
                });
            }
        }
        let close: Vec<Instruction> = open.iter().rev().cloned().collect();
        moments.push(open);
        moments.push(couple);
        moments.push(close);
    }

    moments.push(hub_links);
    moments.push(hadamards);

    let mut measured: Vec<usize> = stabs.iter().map(|s| q(s.syndrome)).collect();
    measured.extend(flags.iter().copied());
    moments.push(measured.iter().enumerate().map(|(r, &qb)| Instruction::MeasureZ { qubit: qb, record: r }).collect());

    moments.retain(|m| !m.is_empty());
    RoundPlan { moments, measured }
}

/// One full stabilizer round of `layout` in its own qubit numbering.
pub fn schedule_round(layout: &CodeLayout) -> RoundPlan {
    plan_round(layout.code_type, &layout.stabilizers)
}

/// Flags whose non-data gates in `plan` are not properly mirrored: every
/// gate linking a flag to a syndrome or another flag must be undone by the
/// identical gate, with inner pairs closed before outer ones.
pub fn unmirrored_flags(layout: &CodeLayout, plan: &RoundPlan) -> Vec<QubitId> {
    let is_flag = |q: usize| layout.role(QubitId(q)) == QubitRole::Flag;
    let is_data = |q: usize| layout.role(QubitId(q)) == QubitRole::Data;
    let mut stacks: BTreeMap<usize, Vec<&Instruction>> = BTreeMap::new();
    for inst in plan.moments.iter().flatten() {
        let (a, b) = match *inst {
            Instruction::Cnot(a, b) | Instruction::Cz(a, b) => (a, b),
            _ => continue,
        };
        for (f, other) in [(a, b), (b, a)] {
            if !is_flag(f) || is_data(other) {
                continue;
            }
            let stack = stacks.entry(f).or_default();
            if stack.last() == Some(&inst) {
                stack.pop();
            } else {
                stack.push(inst);
            }
        }
    }
    stacks.into_iter().filter(|(_, s)| !s.is_empty()).map(|(f, _)| QubitId(f)).collect()
}

struct Emitter {
    c: Circuit,
}

impl Emitter {
    fn moment(&mut self, ops: Vec<Instruction>) {
        if ops.is_empty() {
            return;
        }
        self.c.instructions.extend(ops);
        self.c.instructions.push(Instruction::Tick);
    }

    /// Emit a round and return the record of every measured qubit.
    fn round(&mut self, plan: &RoundPlan) -> HashMap<usize, usize> {
        let base = self.c.record_count;
        for m in &plan.moments {
            let ops = m
                .iter()
                .map(|inst| match *inst {
                    Instruction::MeasureZ { qubit, record } => Instruction::MeasureZ { qubit, record: base + record },
                    ref other => other.clone(),
                })
                .collect();
            self.moment(ops);
        }
        self.c.record_count += plan.measured.len();
        plan.measured.iter().enumerate().map(|(r, &q)| (q, base + r)).collect()
    }

    fn detector(&mut self, records: Vec<usize>, info: DetectorInfo) {
        let index = self.c.detectors.len();
        self.c.detectors.push(info);
        self.c.instructions.push(Instruction::Detector { index, records });
    }

    fn flag_detectors(&mut self, flags: &BTreeSet<usize>, recs: &HashMap<usize, usize>, stage: Stage, round: usize) {
        for &f in flags {
            self.detector(vec![recs[&f]], DetectorInfo { stage, class: DetectorClass::FlagCheck, round, qubit: f });
        }
    }

    fn prepare(&mut self, qubits: &[(usize, Basis)]) {
        self.moment(qubits.iter().map(|&(q, _)| Instruction::ResetZ(q)).collect());
        self.moment(qubits.iter().filter(|(_, b)| *b == Basis::X).map(|&(q, _)| Instruction::Hadamard(q)).collect());
    }
}

fn route_flags(stabs: &[StabilizerSpec]) -> BTreeSet<usize> {
    stabs.iter().flat_map(|s| s.legs.iter().flat_map(|l| l.route.iter().map(|f| f.0))).collect()
}

/// Compile the noiseless injection circuit for one run basis.
pub fn build_injection_circuit(
    layout_d1: &CodeLayout,
    layout_d2: &CodeLayout,
    regions: &RegionAssignment,
    run: RunBasis,
) -> Result<Circuit> {
    let inconsistent = |m: &str| Err(Error::InconsistentLayouts(m.to_string()));
    if layout_d1.code_type != layout_d2.code_type || layout_d1.structure != layout_d2.structure {
        return inconsistent("d1 and d2 layouts differ in code type or structure");
    }
    if layout_d1.distance != regions.d1 || layout_d2.distance != regions.d2 || regions.code_type != layout_d2.code_type
    {
        return inconsistent("region assignment does not match the layouts");
    }
    if regions.regions.len() != layout_d2.data_qubits().count() {
        return inconsistent("region assignment does not cover the d2 data qubits");
    }

    // d1 patch re-expressed in d2 qubit ids
    let mut to_d2 = Vec::with_capacity(layout_d1.qubits.len());
    for qb in &layout_d1.qubits {
        match layout_d2.qubit_at(qb.coord) {
            Some(id) if layout_d2.role(id) == qb.role => to_d2.push(id),
            _ => return inconsistent("d1 patch does not embed in the d2 patch"),
        }
    }
    let m = |id: QubitId| to_d2[id.0];
    let stabs1: Vec<StabilizerSpec> = layout_d1
        .stabilizers
        .iter()
        .map(|s| StabilizerSpec {
            syndrome: m(s.syndrome),
            legs: s
                .legs
                .iter()
                .map(|l| crate::layout::Leg { data: m(l.data), route: l.route.iter().map(|&f| m(f)).collect(), ..l.clone() })
                .collect(),
        })
        .collect();
    let stabs2 = &layout_d2.stabilizers;
    let magic = layout_d2.magic_qubit;

    let mut basis: BTreeMap<QubitId, Basis> = BTreeMap::new();
    for q in layout_d2.data_qubits() {
        match regions.basis(q, run) {
            Some(b) => basis.insert(q, b),
            None => return inconsistent("data qubit without a region"),
        };
    }
    let data1: BTreeSet<QubitId> = layout_d1.data_qubits().map(m).collect();
    let data_new: Vec<QubitId> = layout_d2.data_qubits().filter(|q| !data1.contains(q)).collect();

    let mut e = Emitter {
        c: Circuit {
            qubit_count: layout_d2.qubits.len(),
            observable_basis: Some(run),
            data_qubits: layout_d2.data_qubits().map(|q| q.0).collect(),
            magic_qubit: Some(magic.0),
            ..Default::default()
        },
    };

    // Stage I
    let init1: Vec<(usize, Basis)> = data1.iter().map(|q| (q.0, basis[q])).collect();
    e.prepare(&init1);
    let plan1 = plan_round(layout_d1.code_type, &stabs1);
    let flags1 = route_flags(&stabs1);
    let deterministic = |s: &StabilizerSpec, allowed: &dyn Fn(QubitId) -> bool| {
        s.legs.iter().all(|l| l.data != magic && allowed(l.data) && basis[&l.data] == l.pauli)
    };
    let r1 = e.round(&plan1);
    for s in &stabs1 {
        if deterministic(s, &|_| true) {
            let info = DetectorInfo { stage: Stage::I, class: DetectorClass::StabilizerCompare, round: 1, qubit: s.syndrome.0 };
            e.detector(vec![r1[&s.syndrome.0]], info);
        }
    }
    e.flag_detectors(&flags1, &r1, Stage::I, 1);
    let r2 = e.round(&plan1);
    for s in &stabs1 {
        let q = s.syndrome.0;
        let info = DetectorInfo { stage: Stage::I, class: DetectorClass::StabilizerCompare, round: 2, qubit: q };
        e.detector(vec![r1[&q], r2[&q]], info);
    }
    e.flag_detectors(&flags1, &r2, Stage::I, 2);

    // Stage II
    let init2: Vec<(usize, Basis)> = data_new.iter().map(|q| (q.0, basis[q])).collect();
    e.prepare(&init2);
    let plan2 = plan_round(layout_d2.code_type, stabs2);
    let flags2 = route_flags(stabs2);
    let old: HashMap<QubitId, &StabilizerSpec> = stabs1.iter().map(|s| (s.syndrome, s)).collect();
    let is_new = |q: QubitId| !data1.contains(&q);
    let mut prev = r2;
    for round in 1..=regions.d2 {
        let rec = e.round(&plan2);
        for s in stabs2 {
            let q = s.syndrome.0;
            let info = DetectorInfo { stage: Stage::II, class: DetectorClass::StabilizerCompare, round, qubit: q };
            let records = if round > 1 {
                Some(vec![prev[&q], rec[&q]])
            } else if let Some(t) = old.get(&s.syndrome) {
                let kept = t.data_support();
                let extra_ok = s.legs.iter().filter(|l| !kept.contains(&l.data)).all(|l| basis[&l.data] == l.pauli);
                let nested = kept.is_subset(&s.data_support());
                (nested && extra_ok).then(|| vec![prev[&q], rec[&q]])
            } else {
                deterministic(s, &is_new).then(|| vec![rec[&q]])
            };
            if let Some(records) = records {
                e.detector(records, info);
            }
        }
        e.flag_detectors(&flags2, &rec, Stage::II, round);
        prev = rec;
    }

    // transversal readout of the tested logical: one surface-frame basis,
    // twisted per qubit like the preparation bases
    let logical = layout_d2.logical(run.basis());
    let code = layout_d2.code_type;
    let twist = |q: QubitId, b: Basis| {
        let (i, j) = layout_d2.coord(q).site();
        if code.twisted(i, j) {
            b.flip()
        } else {
            b
        }
    };
    let frame_basis = twist(logical.support[0], logical.pauli);
    let data2: Vec<QubitId> = layout_d2.data_qubits().collect();
    let readout: BTreeMap<QubitId, Basis> = data2.iter().map(|&q| (q, twist(q, frame_basis))).collect();
    e.moment(data2.iter().filter(|q| readout[q] == Basis::X).map(|q| Instruction::Hadamard(q.0)).collect());
    let base = e.c.record_count;
    let data_rec: HashMap<QubitId, usize> = data2.iter().enumerate().map(|(k, &q)| (q, base + k)).collect();
    e.moment(data2.iter().map(|q| Instruction::MeasureZ { qubit: q.0, record: data_rec[q] }).collect());
    e.c.record_count += data2.len();
    for s in stabs2 {
        if s.legs.iter().all(|l| readout[&l.data] == l.pauli) {
            let mut records: Vec<usize> = s.legs.iter().map(|l| data_rec[&l.data]).collect();
            records.push(prev[&s.syndrome.0]);
            let info = DetectorInfo {
                stage: Stage::II,
                class: DetectorClass::FinalReadout,
                round: regions.d2 + 1,
                qubit: s.syndrome.0,
            };
            e.detector(records, info);
        }
    }
    if logical.support.iter().any(|q| readout[q] != logical.pauli) {
        return inconsistent("tested logical is not measured in its own basis");
    }
    let records = logical.support.iter().map(|q| data_rec[q]).collect();
    e.c.instructions.push(Instruction::Observable { records });
    Ok(e.c)
}

/// [`build_injection_circuit`] followed by [`attach_noise`].
pub fn build_noisy_injection_circuit<T: Scalar>(
    layout_d1: &CodeLayout,
    layout_d2: &CodeLayout,
    regions: &RegionAssignment,
    params: &NoiseParams<T>,
    run: RunBasis,
) -> Result<Circuit> {
    attach_noise(&build_injection_circuit(layout_d1, layout_d2, regions, run)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{assign_regions, InitMethod};
    use crate::layout::{build_layout, Structure};

    fn circuit(code: CodeType, st: Structure, m: InitMethod, d1: usize, d2: usize, run: RunBasis) -> Circuit {
        let l1 = build_layout(code, st, d1).unwrap();
        let l2 = build_layout(code, st, d2).unwrap();
        let r = assign_regions(&l2, m, d1, d2).unwrap();
        build_injection_circuit(&l1, &l2, &r, run).unwrap()
    }

    #[test]
    fn lattice_z_leg_is_single_cnot_into_syndrome() {
        let l = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        let plan = schedule_round(&l);
        let s = l.stabilizers.iter().find(|s| s.is_uniform(Basis::Z)).unwrap();
        let leg = &s.legs[0];
        let gates: Vec<&Instruction> = plan
            .moments
            .iter()
            .flatten()
            .filter(|i| i.qubits().contains(&leg.data.0) && i.qubits().contains(&s.syndrome.0))
            .collect();
        assert_eq!(gates, vec![&Instruction::Cnot(leg.data.0, s.syndrome.0)]);
    }

    #[test]
    fn moments_touch_each_qubit_once() {
        for code in CodeType::ALL {
            for st in Structure::ALL {
                let l = build_layout(code, st, 5).unwrap();
                for m in schedule_round(&l).moments {
                    let mut seen = BTreeSet::new();
                    for inst in &m {
                        for q in inst.qubits() {
                            assert!(seen.insert(q), "{code} {st}: qubit {q} twice in a moment");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn round_counts() {
        let c = circuit(CodeType::Surface, Structure::Lattice, InitMethod::DownTriangle, 3, 3, RunBasis::ZRun);
        let rounds = |stage: Stage| {
            c.detectors.iter().filter(|d| d.stage == stage && d.class != DetectorClass::FinalReadout).map(|d| d.round).max()
        };
        assert_eq!(rounds(Stage::I), Some(2));
        assert_eq!(rounds(Stage::II), Some(3));
        assert!(c.detectors.iter().any(|d| d.class == DetectorClass::FinalReadout));
        // 12 syndromes * 5 rounds + 13 data
        assert_eq!(c.record_count, 12 * 5 + 13);
    }

    #[test]
    fn no_extension_prep_when_distances_equal() {
        let c = circuit(CodeType::XzzxType, Structure::HeavyHexagon, InitMethod::RightSquare, 3, 3, RunBasis::XRun);
        let resets_of_data = c
            .instructions
            .iter()
            .filter(|i| matches!(i, Instruction::ResetZ(q) if c.data_qubits.contains(q)))
            .count();
        assert_eq!(resets_of_data, 13);
    }

    #[test]
    fn rejects_mismatched_layouts() {
        let l1 = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        let l2 = build_layout(CodeType::XzzxType, Structure::Lattice, 5).unwrap();
        let r = assign_regions(&l2, InitMethod::DownSquare, 3, 5).unwrap();
        assert!(matches!(
            build_injection_circuit(&l1, &l2, &r, RunBasis::ZRun),
            Err(Error::InconsistentLayouts(_))
        ));
    }

    #[test]
    fn stage_one_detectors_precede_stage_two() {
        let c = circuit(CodeType::ZxxzType, Structure::HeavyHexagon, InitMethod::DownTriangle, 3, 5, RunBasis::ZRun);
        let first_ii = c.detectors.iter().position(|d| d.stage == Stage::II).unwrap();
        assert!(c.detectors[..first_ii].iter().all(|d| d.stage == Stage::I));
        assert!(c.detectors[first_ii..].iter().all(|d| d.stage == Stage::II));
    }

    #[test]
    fn flag_gates_are_mirrored() {
        for code in CodeType::ALL {
            let l = build_layout(code, Structure::HeavyHexagon, 3).unwrap();
            let mut plan = schedule_round(&l);
            assert!(unmirrored_flags(&l, &plan).is_empty(), "{code}");
            // drop the last hub -> bridge gate: its bridge stays open
            let (m, k) = plan
                .moments
                .iter()
                .enumerate()
                .rev()
                .find_map(|(m, ops)| {
                    ops.iter()
                        .position(|i| matches!(*i, Instruction::Cnot(a, b) if l.role(QubitId(a)) == QubitRole::Flag && l.role(QubitId(b)) == QubitRole::Flag))
                        .map(|k| (m, k))
                })
                .unwrap();
            plan.moments[m].remove(k);
            assert_eq!(unmirrored_flags(&l, &plan).len(), 2, "{code}");
        }
    }
}
