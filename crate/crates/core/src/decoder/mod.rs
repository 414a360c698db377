//! Detector graph construction and minimum-weight perfect matching.
//!
//! Every noise mechanism of the circuit is propagated to its detector
//! signature. Mechanisms that touch a Stage-I detector are never decoded
//! (those shots are discarded), the rest become graph edges between one or
//! two Stage-II detectors, or decompose into such edges.

pub mod blossom;
mod matching;

pub use matching::{brute_force_decode, decode, Correction, Decoder, BRUTE_FORCE_LIMIT};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Float;

use crate::circuit::{Circuit, Instruction, Stage};
use crate::error::{Error, Result};
use crate::noise::ChannelLabel;
use crate::pauli::Pauli;
use crate::scalar::Scalar;
use crate::sim::{propagate_faults, Fault, FaultEffect};

/// Fixed-point scale for matching weights.
pub const WEIGHT_SCALE: f64 = 4096.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    /// Node indices; `v == None` is the boundary.
    pub u: usize,
    pub v: Option<usize>,
    pub weight: T,
    pub probability: T,
    pub flips_observable: bool,
    pub(crate) int_weight: i64,
}

#[derive(Debug, Clone)]
pub struct DetectorGraph<T> {
    /// Circuit detector index of every node.
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge<T>>,
    pub dropped_mechanisms: usize,
    pub dropped_probability: f64,
    /// Summed probability of every mechanism that reaches Stage II.
    pub total_probability: f64,
    /// Mechanisms with no detection event but a logical flip.
    pub undetectable_probability: f64,
    node_of: HashMap<usize, usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// `q1 (1 - q2) + q2 (1 - q1)`: probability that exactly one of two
/// independent mechanisms fires.
pub fn merge_probability<T: Float>(q1: T, q2: T) -> T {
    q1 * (T::one() - q2) + q2 * (T::one() - q1)
}

/// `ln((1 - q) / q)`, clamped at zero for `q >= 1/2`.
pub fn edge_weight<T: Float>(q: T) -> T {
    let half = T::from(0.5).expect("float");
    if q >= half {
        return T::zero();
    }
    ((T::one() - q) / q).ln()
}

#[derive(Default)]
struct EdgeAcc {
    q: f64,
    mass_flip: f64,
    mass_keep: f64,
}

/// A mechanism: one outcome of one noise location, with probability.
struct Mechanism {
    probability: f64,
    /// Indices into the basis-fault table; the effect is their xor.
    parts: Vec<usize>,
}

fn basis_faults(circuit: &Circuit) -> (Vec<Fault>, Vec<Mechanism>) {
    let mut faults = Vec::new();
    let mut mechanisms = Vec::new();
    let push = |faults: &mut Vec<Fault>, f: Fault| {
        faults.push(f);
        faults.len() - 1
    };
    for (k, inst) in circuit.instructions.iter().enumerate() {
        match *inst {
            Instruction::Noise1 { qubit, channel } => {
                let x = push(&mut faults, Fault { before: k + 1, paulis: vec![(qubit, Pauli::X)], record_flip: None });
                let z = push(&mut faults, Fault { before: k + 1, paulis: vec![(qubit, Pauli::Z)], record_flip: None });
                for (label, p) in &circuit.channels[channel].outcomes {
                    let ChannelLabel::One(pauli) = label else { continue };
                    let mut parts = Vec::new();
                    if pauli.x_bit() {
                        parts.push(x);
                    }
                    if pauli.z_bit() {
                        parts.push(z);
                    }
                    mechanisms.push(Mechanism { probability: *p, parts });
                }
            }
            Instruction::Noise2 { a, b, channel } => {
                let ids: Vec<usize> = [(a, Pauli::X), (a, Pauli::Z), (b, Pauli::X), (b, Pauli::Z)]
                    .into_iter()
                    .map(|(q, p)| push(&mut faults, Fault { before: k + 1, paulis: vec![(q, p)], record_flip: None }))
                    .collect();
                for (label, p) in &circuit.channels[channel].outcomes {
                    let ChannelLabel::Two(pair) = label else { continue };
                    let bits = [pair.0.x_bit(), pair.0.z_bit(), pair.1.x_bit(), pair.1.z_bit()];
                    let parts = ids.iter().zip(bits).filter(|(_, on)| *on).map(|(id, _)| *id).collect();
                    mechanisms.push(Mechanism { probability: *p, parts });
                }
            }
            Instruction::ReadoutFlip { record, probability } if probability > 0.0 => {
                let id = push(&mut faults, Fault { before: k + 1, paulis: vec![], record_flip: Some(record) });
                mechanisms.push(Mechanism { probability, parts: vec![id] });
            }
            _ => {}
        }
    }
    mechanisms.retain(|m| m.probability > 0.0);
    (faults, mechanisms)
}

fn xor_effects<'a>(effects: impl IntoIterator<Item = &'a FaultEffect>) -> FaultEffect {
    let mut dets = BTreeSet::new();
    let mut obs = false;
    for e in effects {
        for d in &e.detectors {
            if !dets.remove(d) {
                dets.insert(*d);
            }
        }
        obs ^= e.observable;
    }
    FaultEffect { detectors: dets.into_iter().collect(), observable: obs }
}

/// All set partitions of `items`.
fn partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for p in partitions(rest) {
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k].push(first);
            out.push(q);
        }
        let mut q = p;
        q.push(vec![first]);
        out.push(q);
    }
    out
}

/// Largest signature handed to [`split_signature`].
const MAX_SPLIT: usize = 10;

/// Known one- and two-node edges: `(weight, observable flip)`.
type KnownEdges = HashMap<(usize, usize), (f64, bool)>;

/// Most likely split of a detector signature into known one- and two-node
/// edges whose observable flips add up to `observable`.
fn split_signature(sig: &[usize], observable: bool, known: &KnownEdges, boundary: usize) -> Option<Vec<((usize, usize), bool)>> {
    fn search(
        sig: &[usize],
        observable: bool,
        known: &KnownEdges,
        boundary: usize,
        cost: f64,
        chosen: &mut Vec<((usize, usize), bool)>,
        best: &mut Option<(f64, Vec<((usize, usize), bool)>)>,
    ) {
        if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        let Some((&first, rest)) = sig.split_first() else {
            if !observable {
                *best = Some((cost, chosen.clone()));
            }
            return;
        };
        let step = |k: (usize, usize), rest: Vec<usize>, chosen: &mut Vec<_>, best: &mut Option<_>| {
            if let Some(&(w, flip)) = known.get(&k) {
                chosen.push((k, flip));
                search(&rest, observable ^ flip, known, boundary, cost + w, chosen, best);
                chosen.pop();
            }
        };
        step((first, boundary), rest.to_vec(), chosen, best);
        for (i, &v) in rest.iter().enumerate() {
            let mut others = rest.to_vec();
            others.remove(i);
            step((first.min(v), first.max(v)), others, chosen, best);
        }
    }
    let mut best = None;
    search(sig, observable, known, boundary, 0.0, &mut Vec::new(), &mut best);
    best.map(|(_, groups)| groups)
}

impl<T: Float + Scalar> DetectorGraph<T> {
    /// Build the Stage-II matching graph of a noisy circuit.
    pub fn build(circuit: &Circuit) -> Result<Self> {
        if !circuit.is_noisy() {
            return Err(Error::NoiseNotAttached);
        }
        let stage_one: Vec<bool> = circuit.detectors.iter().map(|d| d.stage == Stage::I).collect();
        let nodes: Vec<usize> = circuit.stage_two_detectors().collect();
        let node_of: HashMap<usize, usize> = nodes.iter().enumerate().map(|(n, &d)| (d, n)).collect();

        let (faults, mechanisms) = basis_faults(circuit);
        let effects = propagate_faults(circuit, &faults);
        let signature = |e: &FaultEffect| -> Option<Vec<usize>> {
            if e.detectors.iter().any(|&d| stage_one[d]) {
                return None;
            }
            Some(e.detectors.iter().map(|d| node_of[d]).collect())
        };

        let mut acc: BTreeMap<(usize, usize), EdgeAcc> = BTreeMap::new();
        let boundary = usize::MAX;
        let key = |nodes: &[usize]| match *nodes {
            [u] => (u, boundary),
            [u, v] => (u.min(v), u.max(v)),
            _ => unreachable!(),
        };
        let add = |acc: &mut BTreeMap<(usize, usize), EdgeAcc>, k: (usize, usize), p: f64, flip: bool| {
            let e = acc.entry(k).or_default();
            e.q = merge_probability(e.q, p);
            if flip {
                e.mass_flip += p;
            } else {
                e.mass_keep += p;
            }
        };

        let mut graph_total = 0.0;
        let mut undetectable = 0.0;
        let mut pending = Vec::new();
        for m in &mechanisms {
            let effect = xor_effects(m.parts.iter().map(|&i| &effects[i]));
            let Some(sig) = signature(&effect) else { continue };
            if sig.is_empty() && !effect.observable {
                continue;
            }
            graph_total += m.probability;
            match sig.len() {
                0 => undetectable += m.probability,
                1 | 2 => add(&mut acc, key(&sig), m.probability, effect.observable),
                _ => pending.push((m, effect)),
            }
        }

        let known: BTreeSet<(usize, usize)> = acc.keys().copied().collect();
        let weights: KnownEdges =
            acc.iter().map(|(k, e)| (*k, (edge_weight(e.q), e.mass_flip > e.mass_keep))).collect();
        let mut dropped = 0;
        let mut dropped_probability = 0.0;
        for (m, effect) in &pending {
            let mut chosen = None;
            'search: for part in partitions(&m.parts) {
                let mut groups = Vec::new();
                for group in &part {
                    let e = xor_effects(group.iter().map(|&i| &effects[i]));
                    let Some(sig) = signature(&e) else { continue 'search };
                    match sig.len() {
                        0 if !e.observable => {}
                        1 | 2 if known.contains(&key(&sig)) => groups.push((key(&sig), e.observable)),
                        _ => continue 'search,
                    }
                }
                chosen = Some(groups);
                break;
            }
            if chosen.is_none() && effect.detectors.len() <= MAX_SPLIT {
                let sig = signature(effect).expect("pending mechanisms avoid Stage I");
                chosen = split_signature(&sig, effect.observable, &weights, boundary);
            }
            match chosen {
                Some(groups) => {
                    for (k, flip) in groups {
                        add(&mut acc, k, m.probability, flip);
                    }
                }
                None => {
                    dropped += 1;
                    dropped_probability += m.probability;
                }
            }
        }

        let mut edges = Vec::with_capacity(acc.len());
        let mut adjacency = vec![Vec::new(); nodes.len() + 1];
        for ((u, v), e) in acc {
            let q = T::from(e.q).expect("probability fits");
            let weight = edge_weight(q);
            let int_weight = (weight.to_f64().unwrap_or(0.0) * WEIGHT_SCALE).round() as i64;
            let v = (v != boundary).then_some(v);
            let idx = edges.len();
            adjacency[u].push((v.unwrap_or(nodes.len()), idx));
            adjacency[v.unwrap_or(nodes.len())].push((u, idx));
            edges.push(Edge { u, v, weight, probability: q, flips_observable: e.mass_flip > e.mass_keep, int_weight });
        }
        Ok(DetectorGraph {
            nodes,
            edges,
            dropped_mechanisms: dropped,
            dropped_probability,
            total_probability: graph_total,
            undetectable_probability: undetectable,
            node_of,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_of(&self, detector: usize) -> Option<usize> {
        self.node_of.get(&detector).copied()
    }

    /// Adjacency lists `(neighbour, edge index)`, the boundary being node
    /// `node_count()`.
    pub fn adjacency(&self) -> &[Vec<(usize, usize)>] {
        &self.adjacency
    }

    pub fn dropped_fraction(&self) -> f64 {
        if self.total_probability == 0.0 {
            0.0
        } else {
            self.dropped_probability / self.total_probability
        }
    }

    /// One line per edge, `u v|B weight prob flip`, in circuit detector ids,
    /// sorted.
    pub fn dump(&self) -> String {
        let mut lines: Vec<(usize, usize, String)> = self
            .edges
            .iter()
            .map(|e| {
                let u = self.nodes[e.u];
                let (v, vs) = match e.v {
                    Some(v) => (self.nodes[v], self.nodes[v].to_string()),
                    None => (usize::MAX, "B".to_string()),
                };
                let (a, b, bs) = if v != usize::MAX && v < u { (v, u, u.to_string()) } else { (u, v, vs) };
                let line = format!(
                    "{a} {bs} {:.6} {:.9e} {}",
                    e.weight.to_f64().unwrap_or(f64::NAN),
                    e.probability.to_f64().unwrap_or(f64::NAN),
                    e.flips_observable as u8
                );
                (a, b, line)
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for (_, _, l) in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// Build the matching graph of a noisy circuit.
pub fn build_graph<T: Float + Scalar>(circuit: &Circuit) -> Result<DetectorGraph<T>> {
    DetectorGraph::build(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{DetectorClass, DetectorInfo};
    use crate::noise::{attach_noise, NoiseParams};

    #[test]
    fn merge_formula() {
        assert!((merge_probability(0.1f64, 0.1) - 0.18).abs() < 1e-15);
    }

    #[test]
    fn weight_monotone_and_clamped() {
        assert!(edge_weight(0.01f64) > edge_weight(0.1f64));
        assert_eq!(edge_weight(0.5f64), 0.0);
        assert_eq!(edge_weight(0.7f32), 0.0);
    }

    #[test]
    fn partitions_of_three() {
        assert_eq!(partitions(&[1, 2, 3]).len(), 5);
        assert_eq!(partitions(&[1, 2, 3, 4]).len(), 15);
    }

    /// One readout location with a two-detector signature.
    #[test]
    fn single_location_single_edge() {
        let mut c = Circuit { qubit_count: 1, record_count: 2, ..Default::default() };
        c.instructions = vec![
            Instruction::ResetZ(0),
            Instruction::MeasureZ { qubit: 0, record: 0 },
            Instruction::MeasureZ { qubit: 0, record: 1 },
            Instruction::Detector { index: 0, records: vec![0] },
            Instruction::Detector { index: 1, records: vec![0, 1] },
            Instruction::Observable { records: vec![] },
        ];
        let info = DetectorInfo { stage: Stage::II, class: DetectorClass::StabilizerCompare, round: 1, qubit: 0 };
        c.detectors = vec![info, info];
        let mut c = attach_noise(&c, &NoiseParams::<f64>::noiseless()).unwrap();
        for inst in &mut c.instructions {
            if let Instruction::ReadoutFlip { record: 0, probability } = inst {
                *probability = 0.01;
            }
        }
        let g: DetectorGraph<f64> = build_graph(&c).unwrap();
        assert_eq!(g.edges.len(), 1);
        let e = &g.edges[0];
        assert_eq!((e.u, e.v), (0, Some(1)));
        assert!((e.weight - (0.99f64 / 0.01).ln()).abs() < 1e-12);
        assert_eq!(g.dump(), format!("0 1 {:.6} {:.9e} 0\n", (99.0f64).ln(), 0.01));
    }
}
