//! Shared test helpers, including a CHP stabilizer-tableau simulator used as
//! an independent oracle for the Pauli-frame sampler.

#![allow(dead_code)]

use hexinject::circuit::{assign_regions, build_injection_circuit, Circuit, InitMethod, Instruction, RunBasis};
use hexinject::layout::{build_layout, CodeType, Structure};
use hexinject::noise::ChannelLabel;
use hexinject::pauli::Pauli;
use rand::Rng;

pub fn injection(code: CodeType, st: Structure, m: InitMethod, d1: usize, d2: usize, run: RunBasis) -> Circuit {
    let l1 = build_layout(code, st, d1).unwrap();
    let l2 = build_layout(code, st, d2).unwrap();
    let r = assign_regions(&l2, m, d1, d2).unwrap();
    build_injection_circuit(&l1, &l2, &r, run).unwrap()
}

pub fn all_configs() -> Vec<(CodeType, Structure, InitMethod)> {
    let mut v = Vec::new();
    for c in CodeType::ALL {
        for s in Structure::ALL {
            for m in InitMethod::ALL {
                v.push((c, s, m));
            }
        }
    }
    v
}

/// Aaronson–Gottesman tableau over `n` qubits, rows bit-packed.
pub struct Tableau {
    n: usize,
    w: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl Tableau {
    pub fn new(n: usize) -> Self {
        let w = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Tableau { n, w, x: vec![0; rows * w], z: vec![0; rows * w], r: vec![false; rows] };
        for i in 0..n {
            t.set_x(i, i, true);
            t.set_z(n + i, i, true);
        }
        t
    }

    fn get_x(&self, row: usize, q: usize) -> bool {
        self.x[row * self.w + q / 64] >> (q % 64) & 1 == 1
    }
    fn get_z(&self, row: usize, q: usize) -> bool {
        self.z[row * self.w + q / 64] >> (q % 64) & 1 == 1
    }
    fn set_x(&mut self, row: usize, q: usize, v: bool) {
        let m = 1u64 << (q % 64);
        let i = row * self.w + q / 64;
        if v {
            self.x[i] |= m
        } else {
            self.x[i] &= !m
        }
    }
    fn set_z(&mut self, row: usize, q: usize, v: bool) {
        let m = 1u64 << (q % 64);
        let i = row * self.w + q / 64;
        if v {
            self.z[i] |= m
        } else {
            self.z[i] &= !m
        }
    }

    pub fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            let (x, z) = (self.get_x(i, a), self.get_z(i, a));
            self.r[i] ^= x & z;
            self.set_x(i, a, z);
            self.set_z(i, a, x);
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            let (xa, za, xb, zb) = (self.get_x(i, a), self.get_z(i, a), self.get_x(i, b), self.get_z(i, b));
            self.r[i] ^= xa & zb & !(xb ^ za);
            self.set_x(i, b, xb ^ xa);
            self.set_z(i, a, za ^ zb);
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cnot(a, b);
        self.h(b);
    }

    pub fn pauli(&mut self, a: usize, p: Pauli) {
        for i in 0..2 * self.n {
            let flip = (p.x_bit() & self.get_z(i, a)) ^ (p.z_bit() & self.get_x(i, a));
            self.r[i] ^= flip;
        }
    }

    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => z2 as i32 - x2 as i32,
            (true, false) => (z2 as i32) * (2 * x2 as i32 - 1),
            (false, true) => (x2 as i32) * (1 - 2 * z2 as i32),
        }
    }

    fn rowsum(&mut self, h: usize, i: usize) {
        let mut sum = 2 * self.r[h] as i32 + 2 * self.r[i] as i32;
        for q in 0..self.n {
            sum += Self::g(self.get_x(i, q), self.get_z(i, q), self.get_x(h, q), self.get_z(h, q));
        }
        self.r[h] = sum.rem_euclid(4) == 2;
        for k in 0..self.w {
            self.x[h * self.w + k] ^= self.x[i * self.w + k];
            self.z[h * self.w + k] ^= self.z[i * self.w + k];
        }
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        for k in 0..self.w {
            self.x[dst * self.w + k] = self.x[src * self.w + k];
            self.z[dst * self.w + k] = self.z[src * self.w + k];
        }
        self.r[dst] = self.r[src];
    }

    /// Returns `(outcome, was_random)`.
    pub fn measure(&mut self, a: usize, rng: &mut impl Rng) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&p| self.get_x(p, a)) {
            for i in 0..2 * n {
                if i != p && self.get_x(i, a) {
                    self.rowsum(i, p);
                }
            }
            self.copy_row(p - n, p);
            for k in 0..self.w {
                self.x[p * self.w + k] = 0;
                self.z[p * self.w + k] = 0;
            }
            self.set_z(p, a, true);
            let outcome = rng.gen::<bool>();
            self.r[p] = outcome;
            (outcome, true)
        } else {
            let s = 2 * n;
            for k in 0..self.w {
                self.x[s * self.w + k] = 0;
                self.z[s * self.w + k] = 0;
            }
            self.r[s] = false;
            for i in 0..n {
                if self.get_x(i, a) {
                    self.rowsum(s, i + n);
                }
            }
            (self.r[s], false)
        }
    }

    pub fn reset(&mut self, a: usize, rng: &mut impl Rng) {
        if self.measure(a, rng).0 {
            self.pauli(a, Pauli::X);
        }
    }
}

pub struct TableauShot {
    pub detectors: Vec<bool>,
    pub observable: bool,
}

fn sample_label(table: &[(ChannelLabel, f64)], rng: &mut impl Rng) -> Option<ChannelLabel> {
    let mut u: f64 = rng.gen();
    for (l, p) in table {
        if u < *p {
            return Some(*l);
        }
        u -= p;
    }
    None
}

/// Run `circuit` on a tableau, sampling noise if `noisy`.
pub fn run_tableau(circuit: &Circuit, noisy: bool, rng: &mut impl Rng) -> TableauShot {
    let mut t = Tableau::new(circuit.qubit_count);
    let mut rec = vec![false; circuit.record_count];
    let mut dets = vec![false; circuit.detectors.len()];
    let mut obs = false;
    for inst in &circuit.instructions {
        match inst {
            Instruction::ResetZ(q) => t.reset(*q, rng),
            Instruction::Hadamard(q) => t.h(*q),
            Instruction::Cnot(a, b) => t.cnot(*a, *b),
            Instruction::Cz(a, b) => t.cz(*a, *b),
            Instruction::MeasureZ { qubit, record } => rec[*record] = t.measure(*qubit, rng).0,
            Instruction::Noise1 { qubit, channel } if noisy => {
                if let Some(ChannelLabel::One(p)) = sample_label(&circuit.channels[*channel].outcomes, rng) {
                    t.pauli(*qubit, p);
                }
            }
            Instruction::Noise2 { a, b, channel } if noisy => {
                if let Some(ChannelLabel::Two(pp)) = sample_label(&circuit.channels[*channel].outcomes, rng) {
                    t.pauli(*a, pp.0);
                    t.pauli(*b, pp.1);
                }
            }
            Instruction::ReadoutFlip { record, probability } if noisy => {
                if rng.gen::<f64>() < *probability {
                    rec[*record] ^= true;
                }
            }
            Instruction::Detector { index, records } => {
                dets[*index] = records.iter().fold(false, |a, r| a ^ rec[*r]);
            }
            Instruction::Observable { records } => obs ^= records.iter().fold(false, |a, r| a ^ rec[*r]),
            _ => {}
        }
    }
    TableauShot { detectors: dets, observable: obs }
}
