//! Biased Pauli channels and their placement on a circuit.
//!
//! With total error probability `p` and bias `eta`:
//!
//! * one qubit: `P_X = P_Y = p / (2(eta+1))`, `P_Z = eta p / (eta+1)`;
//! * two qubits: `ZZ`, `ZI`, `IZ` each `eta p / (3(eta+2))`, the other twelve
//!   non-identity pairs each `p / (6(eta+2))`.
//!
//! `eta = 1/2` is uniform depolarizing noise; `eta = inf` leaves only the
//! Z-type terms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, ChannelTable, Instruction};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliPair};
use crate::scalar::Scalar;

/// Noise bias. `Infinite` is kept symbolic so the limit is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bias<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Bias<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Bias::Finite(eta) if *eta < T::half() => Err(Error::InvalidBias),
            _ => Ok(()),
        }
    }

    pub fn depolarizing() -> Self {
        Bias::Finite(T::half())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Bias::Finite(eta) => eta.to_f64_lossy(),
            Bias::Infinite => f64::INFINITY,
        }
    }
}

impl Bias<f64> {
    /// Parses `inf` or a decimal number.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Bias::Infinite);
        }
        let eta: f64 = s.parse().map_err(|_| Error::Config(format!("bad eta value `{s}`")))?;
        if eta.is_infinite() {
            return Ok(Bias::Infinite);
        }
        let bias = Bias::Finite(eta);
        bias.validate()?;
        Ok(bias)
    }
}

impl<T: fmt::Display> fmt::Display for Bias<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bias::Finite(eta) => write!(f, "{eta}"),
            Bias::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelLabel {
    One(Pauli),
    Two(PauliPair),
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelLabel::One(p) => write!(f, "{p}"),
            ChannelLabel::Two(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDistribution<T> {
    pub support: Vec<(ChannelLabel, T)>,
}

impl<T: Scalar> ChannelDistribution<T> {
    pub fn total(&self) -> T {
        self.support.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone())
    }

    pub fn probability(&self, label: ChannelLabel) -> T {
        self.support.iter().find(|(l, _)| *l == label).map(|(_, p)| p.clone()).unwrap_or_else(T::zero)
    }

    pub fn to_f64(&self) -> ChannelDistribution<f64> {
        ChannelDistribution { support: self.support.iter().map(|(l, p)| (*l, p.to_f64_lossy())).collect() }
    }
}

fn check_probability<T: Scalar>(p: &T) -> Result<()> {
    if *p < T::zero() || *p > T::one() {
        return Err(Error::InvalidProbability(p.to_f64_lossy()));
    }
    Ok(())
}

pub fn single_qubit_channel<T: Scalar>(p: T, eta: Bias<T>) -> Result<ChannelDistribution<T>> {
    check_probability(&p)?;
    eta.validate()?;
    let two = T::one() + T::one();
    let (px, pz) = match eta {
        Bias::Infinite => (T::zero(), p),
        Bias::Finite(eta) => {
            let denom = eta.clone() + T::one();
            (p.clone() / (two * denom.clone()), eta * p / denom)
        }
    };
    Ok(ChannelDistribution {
        support: vec![
            (ChannelLabel::One(Pauli::X), px.clone()),
            (ChannelLabel::One(Pauli::Y), px),
            (ChannelLabel::One(Pauli::Z), pz),
        ],
    })
}

fn is_z_type(pair: PauliPair) -> bool {
    matches!((pair.0, pair.1), (Pauli::Z, Pauli::Z) | (Pauli::Z, Pauli::I) | (Pauli::I, Pauli::Z))
}

pub fn two_qubit_channel<T: Scalar>(p: T, eta: Bias<T>) -> Result<ChannelDistribution<T>> {
    check_probability(&p)?;
    eta.validate()?;
    let three = T::from_count(3);
    let (other, z_type) = match eta {
        Bias::Infinite => (T::zero(), p / three),
        Bias::Finite(eta) => {
            let denom = eta.clone() + T::from_count(2);
            (p.clone() / (T::from_count(6) * denom.clone()), eta * p / (three * denom))
        }
    };
    let support = PauliPair::non_identity()
        .map(|pair| {
            let prob = if is_z_type(pair) { z_type.clone() } else { other.clone() };
            (ChannelLabel::Two(pair), prob)
        })
        .collect();
    Ok(ChannelDistribution { support })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    pub p_double: T,
    pub p_single: T,
    pub p_readout: T,
    pub eta: Bias<T>,
}

impl<T: Scalar> NoiseParams<T> {
    /// `p_single = p_double / 20`, `p_readout = p_double`.
    pub fn new(p_double: T, eta: Bias<T>) -> Result<Self> {
        let params = NoiseParams {
            p_single: p_double.clone() / T::from_count(20),
            p_readout: p_double.clone(),
            p_double,
            eta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn noiseless() -> Self {
        NoiseParams { p_double: T::zero(), p_single: T::zero(), p_readout: T::zero(), eta: Bias::depolarizing() }
    }

    pub fn with_single(mut self, p_single: T) -> Result<Self> {
        self.p_single = p_single;
        self.validate()?;
        Ok(self)
    }

    pub fn with_readout(mut self, p_readout: T) -> Result<Self> {
        self.p_readout = p_readout;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(&self.p_double)?;
        check_probability(&self.p_single)?;
        check_probability(&self.p_readout)?;
        self.eta.validate()
    }

    pub fn single_channel(&self) -> Result<ChannelDistribution<T>> {
        single_qubit_channel(self.p_single.clone(), self.eta.clone())
    }

    pub fn double_channel(&self) -> Result<ChannelDistribution<T>> {
        two_qubit_channel(self.p_double.clone(), self.eta.clone())
    }

    pub fn to_f64(&self) -> NoiseParams<f64> {
        NoiseParams {
            p_double: self.p_double.to_f64_lossy(),
            p_single: self.p_single.to_f64_lossy(),
            p_readout: self.p_readout.to_f64_lossy(),
            eta: match &self.eta {
                Bias::Finite(e) => Bias::Finite(e.to_f64_lossy()),
                Bias::Infinite => Bias::Infinite,
            },
        }
    }
}

/// Channel slot indices in [`Circuit::channels`] after [`attach_noise`].
pub const SINGLE_CHANNEL: usize = 0;
pub const DOUBLE_CHANNEL: usize = 1;

/// Insert noise after every operation: `Noise2` after CNOT/CZ, `Noise1` after
/// Hadamard and reset, and a `ReadoutFlip` after every measurement.
pub fn attach_noise<T: Scalar>(circuit: &Circuit, params: &NoiseParams<T>) -> Result<Circuit> {
    if circuit.is_noisy() {
        return Err(Error::NoiseAlreadyAttached);
    }
    params.validate()?;
    let single = ChannelTable::from_distribution(&params.single_channel()?.to_f64());
    let double = ChannelTable::from_distribution(&params.double_channel()?.to_f64());
    let p_readout = params.p_readout.to_f64_lossy();

    let mut out = circuit.clone();
    out.instructions.clear();
    out.instructions.reserve(circuit.instructions.len() * 2);
    for inst in &circuit.instructions {
        out.instructions.push(inst.clone());
        match *inst {
            Instruction::ResetZ(q) | Instruction::Hadamard(q) => {
                out.instructions.push(Instruction::Noise1 { qubit: q, channel: SINGLE_CHANNEL })
            }
            Instruction::Cnot(a, b) | Instruction::Cz(a, b) => {
                out.instructions.push(Instruction::Noise2 { a, b, channel: DOUBLE_CHANNEL })
            }
            Instruction::MeasureZ { record, .. } => {
                out.instructions.push(Instruction::ReadoutFlip { record, probability: p_readout })
            }
            _ => {}
        }
    }
    out.channels = vec![single, double];
    Ok(out)
}
