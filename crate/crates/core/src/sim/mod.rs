//! Pauli-frame sampling of detection events.
//!
//! Each qubit carries an X bit and a Z bit per shot, packed 64 shots to a
//! word. Clifford gates update the frame; noise instructions xor random
//! Paulis in; a Z measurement records the frame's X bit. Because every
//! detector is deterministic in the noiseless circuit, the recorded flips are
//! exactly the detection events.
//!
//! Randomness comes from one ChaCha8 stream per `(seed, batch index)`, so a
//! batch is reproducible on its own and batches may run in any order.

mod fault;

pub use fault::{fault_at, find_blind_qubits, propagate_fault, propagate_faults, single_faults, Fault, FaultEffect};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{ChannelTable, Circuit, DetectorInfo, Instruction};
use crate::error::{Error, Result};
use crate::noise::ChannelLabel;
use crate::pauli::Pauli;

pub const DEFAULT_BATCH_SIZE: usize = 64 * 1024;

/// Detection events and observable flips of one batch of shots. Events are
/// stored detector-major: `events[d * words + w]` holds shots `64w..64w+63`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBatch {
    pub seed: u64,
    pub batch_index: u64,
    pub shots: usize,
    pub detectors: usize,
    pub words: usize,
    pub events: Vec<u64>,
    pub observables: Vec<u64>,
}

impl ShotBatch {
    pub fn detector_words(&self, det: usize) -> &[u64] {
        &self.events[det * self.words..(det + 1) * self.words]
    }

    pub fn event(&self, shot: usize, det: usize) -> bool {
        self.events[det * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn observable(&self, shot: usize) -> bool {
        self.observables[shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn fired(&self, shot: usize) -> Vec<usize> {
        (0..self.detectors).filter(|&d| self.event(shot, d)).collect()
    }

    pub fn total_events(&self) -> u64 {
        self.events.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Shots-major packed rows, each `ceil(detectors / 8)` bytes,
    /// little-endian bit order within a byte.
    pub fn to_shot_major_bytes(&self) -> Vec<u8> {
        let row = self.detectors.div_ceil(8);
        let mut out = vec![0u8; row * self.shots];
        for d in 0..self.detectors {
            let words = self.detector_words(d);
            for (w, &word) in words.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let shot = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    out[shot * row + d / 8] |= 1 << (d % 8);
                }
            }
        }
        out
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    shots: usize,
    detectors: usize,
    bytes_per_shot: usize,
    layout: &'static str,
    bit_order: &'static str,
    seed: u64,
    batch_index: u64,
    detector_metadata: &'a [DetectorInfo],
    observables: Vec<u8>,
}

/// Write the binary detection-event dump and return its JSON sidecar. The
/// sidecar also lists observable flips, one byte per shot.
pub fn write_detection_events(batch: &ShotBatch, circuit: &Circuit, out: &mut impl Write) -> Result<String> {
    out.write_all(&batch.to_shot_major_bytes())?;
    let sidecar = Sidecar {
        shots: batch.shots,
        detectors: batch.detectors,
        bytes_per_shot: batch.detectors.div_ceil(8),
        layout: "shots-major",
        bit_order: "little-endian",
        seed: batch.seed,
        batch_index: batch.batch_index,
        detector_metadata: &circuit.detectors,
        observables: (0..batch.shots).map(|s| batch.observable(s) as u8).collect(),
    };
    serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))
}

/// Channel ready for geometric-skip sampling.
struct ChannelSampler {
    total: f64,
    ln_keep: f64,
    cumulative: Vec<(f64, ChannelLabel)>,
}

impl ChannelSampler {
    fn new(table: &ChannelTable) -> Self {
        let total = table.total().min(1.0);
        let mut acc = 0.0;
        let cumulative = table
            .outcomes
            .iter()
            .map(|(l, p)| {
                acc += p;
                (acc, *l)
            })
            .collect();
        ChannelSampler { total, ln_keep: (1.0 - total).ln(), cumulative }
    }

    fn label(&self, rng: &mut ChaCha8Rng) -> ChannelLabel {
        let r = rng.gen::<f64>() * self.total;
        self.cumulative.iter().find(|(c, _)| r < *c).unwrap_or(self.cumulative.last().expect("nonempty")).1
    }
}

/// Call `hit` for every shot in `0..n` that an event of probability `p` hits.
fn for_each_hit(rng: &mut ChaCha8Rng, p: f64, ln_keep: f64, n: usize, mut hit: impl FnMut(usize, &mut ChaCha8Rng)) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for s in 0..n {
            hit(s, rng);
        }
        return;
    }
    let skip = |rng: &mut ChaCha8Rng| {
        let u: f64 = 1.0 - rng.gen::<f64>();
        (u.ln() / ln_keep) as usize
    };
    let mut pos = skip(rng);
    while pos < n {
        hit(pos, rng);
        pos = pos.saturating_add(1).saturating_add(skip(rng));
    }
}

/// Bit-packed Pauli frame over `words * 64` lanes.
pub(crate) struct Frame {
    pub words: usize,
    pub x: Vec<u64>,
    pub z: Vec<u64>,
    pub records: Vec<u64>,
}

impl Frame {
    pub fn new(qubits: usize, records: usize, words: usize) -> Self {
        Frame { words, x: vec![0; qubits * words], z: vec![0; qubits * words], records: vec![0; records * words] }
    }

    #[inline]
    fn span(&self, q: usize) -> std::ops::Range<usize> {
        q * self.words..(q + 1) * self.words
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli, word: usize, mask: u64) {
        let i = q * self.words + word;
        if p.x_bit() {
            self.x[i] ^= mask;
        }
        if p.z_bit() {
            self.z[i] ^= mask;
        }
    }

    /// Apply a noiseless instruction. Returns true if it was handled.
    pub fn gate(&mut self, inst: &Instruction) -> bool {
        let w = self.words;
        match *inst {
            Instruction::ResetZ(q) => {
                let r = self.span(q);
                self.x[r.clone()].fill(0);
                self.z[r].fill(0);
            }
            Instruction::Hadamard(q) => {
                let r = self.span(q);
                let (x, z) = (&mut self.x[r.clone()], &mut self.z[r]);
                x.swap_with_slice(z);
            }
            Instruction::Cnot(c, t) => {
                for k in 0..w {
                    self.x[t * w + k] ^= self.x[c * w + k];
                    self.z[c * w + k] ^= self.z[t * w + k];
                }
            }
            Instruction::Cz(a, b) => {
                for k in 0..w {
                    self.z[a * w + k] ^= self.x[b * w + k];
                    self.z[b * w + k] ^= self.x[a * w + k];
                }
            }
            Instruction::MeasureZ { qubit, record } => {
                let (src, dst) = (qubit * w, record * w);
                for k in 0..w {
                    self.records[dst + k] = self.x[src + k];
                }
            }
            _ => return false,
        }
        true
    }

    pub fn parity(&self, records: &[usize], out: &mut [u64]) {
        out.fill(0);
        for &r in records {
            for (o, v) in out.iter_mut().zip(&self.records[r * self.words..(r + 1) * self.words]) {
                *o ^= v;
            }
        }
    }
}

fn lane_mask(shots: usize, word: usize) -> u64 {
    let remaining = shots - word * 64;
    if remaining >= 64 {
        u64::MAX
    } else {
        (1u64 << remaining) - 1
    }
}

/// Sample one batch. The stream is fixed by `(seed, batch_index)`.
pub fn sample_batch(circuit: &Circuit, seed: u64, batch_index: u64, shots: usize) -> Result<ShotBatch> {
    if !circuit.is_noisy() {
        return Err(Error::NoiseNotAttached);
    }
    let words = shots.div_ceil(64).max(1);
    let samplers: Vec<ChannelSampler> = circuit.channels.iter().map(ChannelSampler::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index);

    let mut frame = Frame::new(circuit.qubit_count, circuit.record_count, words);
    let mut events = vec![0u64; circuit.detectors.len() * words];
    let mut observables = vec![0u64; words];
    let mut scratch = vec![0u64; words];

    for inst in &circuit.instructions {
        if frame.gate(inst) {
            continue;
        }
        match inst {
            Instruction::Noise1 { qubit, channel } => {
                let s = &samplers[*channel];
                for_each_hit(&mut rng, s.total, s.ln_keep, shots, |shot, rng| {
                    if let ChannelLabel::One(p) = s.label(rng) {
                        frame.apply_pauli(*qubit, p, shot / 64, 1 << (shot % 64));
                    }
                });
            }
            Instruction::Noise2 { a, b, channel } => {
                let s = &samplers[*channel];
                for_each_hit(&mut rng, s.total, s.ln_keep, shots, |shot, rng| {
                    if let ChannelLabel::Two(pp) = s.label(rng) {
                        let (word, mask) = (shot / 64, 1 << (shot % 64));
                        frame.apply_pauli(*a, pp.0, word, mask);
                        frame.apply_pauli(*b, pp.1, word, mask);
                    }
                });
            }
            Instruction::ReadoutFlip { record, probability } => {
                let ln_keep = (1.0 - probability).ln();
                for_each_hit(&mut rng, *probability, ln_keep, shots, |shot, _| {
                    frame.records[record * words + shot / 64] ^= 1 << (shot % 64);
                });
            }
            Instruction::Detector { index, records } => {
                frame.parity(records, &mut scratch);
                events[index * words..(index + 1) * words].copy_from_slice(&scratch);
            }
            Instruction::Observable { records } => {
                frame.parity(records, &mut scratch);
                for (o, s) in observables.iter_mut().zip(&scratch) {
                    *o ^= s;
                }
            }
            _ => {}
        }
    }
    for w in 0..words {
        let mask = lane_mask(shots, w);
        observables[w] &= mask;
        for d in 0..circuit.detectors.len() {
            events[d * words + w] &= mask;
        }
    }
    Ok(ShotBatch { seed, batch_index, shots, detectors: circuit.detectors.len(), words, events, observables })
}

/// Split `shots` into batches of `batch_size` (the last one shorter).
pub fn batch_plan(shots: usize, batch_size: usize) -> Vec<usize> {
    let batch_size = batch_size.max(1);
    let mut plan = vec![batch_size; shots / batch_size];
    if shots % batch_size != 0 {
        plan.push(shots % batch_size);
    }
    plan
}

/// Sample `shots` shots in parallel batches, returned in batch order.
pub fn sample(circuit: &Circuit, shots: usize, seed: u64, batch_size: usize) -> Result<Vec<ShotBatch>> {
    batch_plan(shots, batch_size)
        .into_par_iter()
        .enumerate()
        .map(|(k, n)| sample_batch(circuit, seed, k as u64, n))
        .collect()
}
