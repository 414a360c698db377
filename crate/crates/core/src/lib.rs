//! Simulation of magic state injection on lattice and heavy-hexagon hardware.
//!
//! The pipeline is: [`layout`] builds a code patch, [`circuit`] compiles the
//! two-stage injection protocol, [`noise`] attaches biased Pauli channels,
//! [`sim`] samples detection events with a bit-packed Pauli frame,
//! [`decoder`] corrects Stage II syndromes with exact minimum-weight perfect
//! matching, and [`experiment`] turns shots into logical error rates.

pub mod circuit;
pub mod decoder;
pub mod error;
pub mod experiment;
pub mod layout;
pub mod noise;
pub mod pauli;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use circuit::{Circuit, InitMethod, RegionAssignment, RunBasis};
pub use layout::{CodeLayout, CodeType, Structure};

/// Exact rational scalar used by the channel-table identities.
pub type Rational = num_rational::Ratio<i64>;

pub type NoiseParams64 = noise::NoiseParams<f64>;
pub type NoiseParams32 = noise::NoiseParams<f32>;
pub type ExactNoiseParams = noise::NoiseParams<Rational>;
pub type Channel64 = noise::ChannelDistribution<f64>;
pub type ExactChannel = noise::ChannelDistribution<Rational>;
pub type Bias64 = noise::Bias<f64>;
pub type DetectorGraph64 = decoder::DetectorGraph<f64>;
pub type DetectorGraph32 = decoder::DetectorGraph<f32>;
