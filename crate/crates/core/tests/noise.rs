mod common;

use common::injection;
use hexinject::circuit::{Instruction, RunBasis};
use hexinject::noise::{attach_noise, single_qubit_channel, two_qubit_channel, Bias, ChannelLabel, NoiseParams};
use hexinject::pauli::{Pauli, PauliPair};
use hexinject::sim::sample;
use hexinject::{CodeType, Error, InitMethod, Rational, Structure};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn etas() -> Vec<Bias<Rational>> {
    let mut v: Vec<Bias<Rational>> =
        [(1, 2), (1, 1), (5, 1), (10, 1), (100, 1), (1_000_000, 1)].iter().map(|&(n, d)| Bias::Finite(Rational::new(n, d))).collect();
    v.push(Bias::Infinite);
    v
}

#[test]
fn channels_normalize_exactly() {
    for p in [Rational::new(1, 2000), Rational::new(1, 100), Rational::new(1, 7), Rational::one()] {
        for eta in etas() {
            let one = single_qubit_channel(p, eta).unwrap();
            let two = two_qubit_channel(p, eta).unwrap();
            assert_eq!(one.total(), p, "{eta}");
            assert_eq!(two.total(), p, "{eta}");
            assert_eq!(one.support.len(), 3);
            assert_eq!(two.support.len(), 15);
            assert!(one.support.iter().chain(&two.support).all(|(_, q)| *q >= Rational::zero()));
            // X and Y always share weight on one qubit
            assert_eq!(one.probability(ChannelLabel::One(Pauli::X)), one.probability(ChannelLabel::One(Pauli::Y)));
        }
    }
}

#[test]
fn bias_ratio_is_eta() {
    let p = Rational::new(1, 100);
    for eta in etas() {
        let Bias::Finite(e) = eta else { continue };
        let one = single_qubit_channel(p, eta).unwrap();
        let z = one.probability(ChannelLabel::One(Pauli::Z));
        let xy = one.probability(ChannelLabel::One(Pauli::X)) + one.probability(ChannelLabel::One(Pauli::Y));
        assert_eq!(z / xy, e);
        let two = two_qubit_channel(p, eta).unwrap();
        let zt: Rational = [(Pauli::Z, Pauli::Z), (Pauli::Z, Pauli::I), (Pauli::I, Pauli::Z)]
            .iter()
            .map(|&(a, b)| two.probability(ChannelLabel::Two(PauliPair(a, b))))
            .sum();
        // three Z-type pairs against twelve others at half the weight
        assert_eq!(zt / (p - zt), e / Rational::from_integer(2));
    }
}

fn eta_f64() -> impl Strategy<Value = f64> {
    0.5f64..1.0e4
}

proptest! {
    #[test]
    fn z_weight_grows_with_eta(p in 1e-5f64..0.5, a in eta_f64(), b in eta_f64()) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let z = |e: f64| single_qubit_channel(p, Bias::Finite(e)).unwrap().probability(ChannelLabel::One(Pauli::Z));
        let zz = |e: f64| two_qubit_channel(p, Bias::Finite(e)).unwrap().probability(ChannelLabel::Two(PauliPair(Pauli::Z, Pauli::Z)));
        let xx = |e: f64| two_qubit_channel(p, Bias::Finite(e)).unwrap().probability(ChannelLabel::Two(PauliPair(Pauli::X, Pauli::X)));
        prop_assert!(z(lo) <= z(hi) + 1e-15);
        prop_assert!(zz(lo) <= zz(hi) + 1e-15);
        prop_assert!(xx(lo) + 1e-15 >= xx(hi));
        let inf = single_qubit_channel(p, Bias::Infinite).unwrap().probability(ChannelLabel::One(Pauli::Z));
        prop_assert!(z(hi) <= inf + 1e-15);
    }

    #[test]
    fn f64_matches_exact(num in 1i64..1000, e in prop::sample::select(vec![(1i64, 2i64), (1, 1), (5, 1), (10, 1), (100, 1)])) {
        let p = Rational::new(num, 10_000);
        let eta = Rational::new(e.0, e.1);
        let exact = two_qubit_channel(p, Bias::Finite(eta)).unwrap();
        let float = two_qubit_channel(num as f64 / 1e4, Bias::Finite(e.0 as f64 / e.1 as f64)).unwrap();
        for ((la, pa), (lb, pb)) in exact.support.iter().zip(&float.support) {
            prop_assert_eq!(la, lb);
            let pa = *pa.numer() as f64 / *pa.denom() as f64;
            prop_assert!((pa - pb).abs() < 1e-15);
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(Bias::<f64>::parse("0.25"), Err(Error::InvalidBias)));
    assert!(Bias::<f64>::parse("abc").is_err());
    assert_eq!(Bias::<f64>::parse("inf").unwrap(), Bias::Infinite);
    assert!(NoiseParams::new(1.5f64, Bias::depolarizing()).is_err());
    assert!(NoiseParams::new(-0.1f64, Bias::depolarizing()).is_err());
    assert!(single_qubit_channel(0.1f64, Bias::Finite(0.4)).is_err());
}

#[test]
fn one_noise_location_per_operation() {
    let base = injection(CodeType::XzzxType, Structure::HeavyHexagon, InitMethod::RightTriangle, 3, 5, RunBasis::XRun);
    let noisy = attach_noise(&base, &NoiseParams::new(0.003, Bias::Finite(10.0)).unwrap()).unwrap();
    let ops = base.count_where(|i| {
        matches!(i, Instruction::ResetZ(_) | Instruction::Hadamard(_) | Instruction::Cnot(..) | Instruction::Cz(..) | Instruction::MeasureZ { .. })
    });
    assert_eq!(noisy.noise_location_count(), ops);
    // every noise instruction follows the operation it belongs to
    for w in noisy.instructions.windows(2) {
        match (&w[0], &w[1]) {
            (Instruction::Cnot(a, b) | Instruction::Cz(a, b), Instruction::Noise2 { a: x, b: y, .. }) => assert_eq!((a, b), (x, y)),
            (_, Instruction::Noise2 { .. }) => panic!("stray two-qubit channel"),
            (Instruction::ResetZ(q) | Instruction::Hadamard(q), Instruction::Noise1 { qubit, .. }) => assert_eq!(q, qubit),
            (_, Instruction::Noise1 { .. }) => panic!("stray one-qubit channel"),
            (Instruction::MeasureZ { record, .. }, Instruction::ReadoutFlip { record: r, .. }) => assert_eq!(record, r),
            (_, Instruction::ReadoutFlip { .. }) => panic!("stray readout flip"),
            _ => {}
        }
    }
    assert!(matches!(attach_noise(&noisy, &NoiseParams::new(0.001, Bias::Infinite).unwrap()), Err(Error::NoiseAlreadyAttached)));
}

#[test]
fn infinite_bias_drops_non_z_outcomes() {
    let base = injection(CodeType::Surface, Structure::Lattice, InitMethod::DownSquare, 3, 3, RunBasis::ZRun);
    let noisy = attach_noise(&base, &NoiseParams::new(0.01, Bias::Infinite).unwrap()).unwrap();
    for table in &noisy.channels {
        for (label, _) in &table.outcomes {
            let ok = match label {
                ChannelLabel::One(p) => *p == Pauli::Z,
                ChannelLabel::Two(PauliPair(a, b)) => !a.x_bit() && !b.x_bit(),
            };
            assert!(ok, "{label:?}");
        }
    }
}

#[test]
fn zero_noise_samples_like_noiseless() {
    let base = injection(CodeType::ZxxzType, Structure::HeavyHexagon, InitMethod::DownTriangle, 3, 3, RunBasis::XRun);
    let noisy = attach_noise(&base, &NoiseParams::new(0.0, Bias::Finite(100.0)).unwrap()).unwrap();
    assert!(matches!(sample(&base, 10, 3, 16), Err(Error::NoiseNotAttached)));
    for batch in sample(&noisy, 5000, 3, 4096).unwrap() {
        assert_eq!(batch.total_events(), 0);
        assert!((0..batch.shots).all(|s| !batch.observable(s)));
    }
}
