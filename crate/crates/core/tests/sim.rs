mod common;

use common::run_tableau;
use hexinject::circuit::{ChannelTable, Circuit, DetectorClass, DetectorInfo, Instruction, Stage};
use hexinject::noise::{single_qubit_channel, two_qubit_channel, Bias};
use hexinject::sim::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Clifford `U` followed by `U^-1`, noise after every gate, then a Z
/// measurement of every qubit. Detectors are single records and random
/// pairs; the observable is a random subset of records.
fn random_circuit(rng: &mut impl Rng) -> Circuit {
    let n = rng.gen_range(2..=6);
    let p = rng.gen_range(0.005..0.05);
    let eta = [0.5, 1.0, 10.0, 100.0][rng.gen_range(0..4)];
    let mut gates = Vec::new();
    for _ in 0..rng.gen_range(5..25) {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        gates.push(match rng.gen_range(0..3) {
            0 => Instruction::Hadamard(a),
            1 => Instruction::Cnot(a, b),
            _ => Instruction::Cz(a, b),
        });
    }
    let mut inst: Vec<Instruction> = (0..n).flat_map(|q| [Instruction::ResetZ(q), Instruction::Noise1 { qubit: q, channel: 0 }]).collect();
    for g in gates.iter().chain(gates.iter().rev()) {
        inst.push(g.clone());
        inst.push(match *g {
            Instruction::Hadamard(q) => Instruction::Noise1 { qubit: q, channel: 0 },
            Instruction::Cnot(a, b) | Instruction::Cz(a, b) => Instruction::Noise2 { a, b, channel: 1 },
            _ => unreachable!(),
        });
    }
    let readout = rng.gen_range(0.0..0.02);
    for q in 0..n {
        inst.push(Instruction::MeasureZ { qubit: q, record: q });
        inst.push(Instruction::ReadoutFlip { record: q, probability: readout });
    }
    let mut dets: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
    for _ in 0..3 {
        let mut pair: Vec<usize> = (0..n).collect();
        pair.shuffle(rng);
        pair.truncate(2);
        pair.sort();
        dets.push(pair);
    }
    let info = DetectorInfo { stage: Stage::II, class: DetectorClass::StabilizerCompare, round: 1, qubit: 0 };
    for (index, records) in dets.iter().enumerate() {
        inst.push(Instruction::Detector { index, records: records.clone() });
    }
    let obs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    inst.push(Instruction::Observable { records: obs });
    Circuit {
        qubit_count: n,
        instructions: inst,
        record_count: n,
        detectors: vec![info; dets.len()],
        observable_basis: None,
        channels: vec![
            ChannelTable::from_distribution(&single_qubit_channel(p / 4.0, Bias::Finite(eta)).unwrap()),
            ChannelTable::from_distribution(&two_qubit_channel(p, Bias::Finite(eta)).unwrap()),
        ],
        data_qubits: (0..n).collect(),
        magic_qubit: None,
    }
}

#[test]
fn frame_sampler_matches_tableau() {
    const FRAME_SHOTS: usize = 40_000;
    const TABLEAU_SHOTS: usize = 8_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for c in 0..50 {
        let circ = random_circuit(&mut rng);
        let m = circ.detectors.len();
        let mut frame = vec![0u64; m + 1];
        for b in sample(&circ, FRAME_SHOTS, c, 8192).unwrap() {
            for s in 0..b.shots {
                for d in 0..m {
                    frame[d] += b.event(s, d) as u64;
                }
                frame[m] += b.observable(s) as u64;
            }
        }
        let mut tab = vec![0u64; m + 1];
        for _ in 0..TABLEAU_SHOTS {
            let shot = run_tableau(&circ, true, &mut rng);
            for d in 0..m {
                tab[d] += shot.detectors[d] as u64;
            }
            tab[m] += shot.observable as u64;
        }
        for k in 0..=m {
            let (a, b) = (frame[k] as f64 / FRAME_SHOTS as f64, tab[k] as f64 / TABLEAU_SHOTS as f64);
            let pooled = (frame[k] + tab[k]) as f64 / (FRAME_SHOTS + TABLEAU_SHOTS) as f64;
            let se = (pooled * (1.0 - pooled) * (1.0 / FRAME_SHOTS as f64 + 1.0 / TABLEAU_SHOTS as f64)).sqrt();
            let z = if se > 0.0 { (a - b).abs() / se } else { 0.0 };
            worst = worst.max(z);
            assert!(z < 5.0, "circuit {c} stat {k}: frame {a} tableau {b} (z = {z:.2})");
        }
    }
    eprintln!("largest z-score over all statistics: {worst:.2}");
}

#[test]
fn noiseless_random_circuits_are_silent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut circ = random_circuit(&mut rng);
        for t in &mut circ.channels {
            t.outcomes.clear();
        }
        circ.instructions.retain(|i| !matches!(i, Instruction::ReadoutFlip { .. }));
        for b in sample(&circ, 256, 1, 256).unwrap() {
            assert_eq!(b.total_events(), 0);
        }
        let shot = run_tableau(&circ, false, &mut rng);
        assert!(shot.detectors.iter().all(|d| !d) && !shot.observable);
    }
}

#[test]
fn sampling_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let circ = random_circuit(&mut rng);
    let a = sample(&circ, 10_000, 77, 4096).unwrap();
    let b = sample(&circ, 10_000, 77, 4096).unwrap();
    let c = sample(&circ, 10_000, 78, 4096).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.iter().map(|b| b.shots).collect::<Vec<_>>(), vec![4096, 4096, 1808]);
}
