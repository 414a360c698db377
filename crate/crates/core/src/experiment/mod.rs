//! Shot campaigns: compile, sample, post-select on Stage I, decode Stage II.
//!
//! `E_X` comes from the Z-basis run (a logical X flips the Z-parity
//! readout) and `E_Z` from the X-basis run.

mod audit;
mod sweep;

pub use audit::{verify, AuditReport, Check, CheckStatus};
pub use sweep::{row_key, row_seed, sweep, write_csv, SweepGrid, SweepRow, SweepSummary, CSV_HEADER};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{assign_regions, build_injection_circuit, Circuit, InitMethod, RunBasis};
use crate::decoder::{DetectorGraph, Decoder};
use crate::error::{Error, Result};
use crate::layout::{build_layout, CodeType, Structure};
use crate::noise::{attach_noise, Bias, NoiseParams};
use crate::sim::{batch_plan, sample_batch, ShotBatch, DEFAULT_BATCH_SIZE};

/// Desk-scale shots per basis.
pub const DEFAULT_SHOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    pub code_type: CodeType,
    pub structure: Structure,
    pub d1: usize,
    pub d2: usize,
    pub init_method: InitMethod,
    pub noise: NoiseParams<f64>,
    /// Shots per basis.
    pub shots: usize,
    pub seed: u64,
    pub bases: Vec<RunBasis>,
    pub batch_size: usize,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            code_type: CodeType::Surface,
            structure: Structure::Lattice,
            d1: 3,
            d2: 3,
            init_method: InitMethod::RightTriangle,
            noise: NoiseParams::new(0.005, Bias::depolarizing()).expect("valid default noise"),
            shots: DEFAULT_SHOTS,
            seed: 0,
            bases: RunBasis::BOTH.to_vec(),
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl InjectionConfig {
    pub fn validate(&self) -> Result<()> {
        crate::layout::validate_distance(self.d1)?;
        crate::layout::validate_distance(self.d2)?;
        if self.d1 > self.d2 {
            return Err(Error::DistanceOrder { d1: self.d1, d2: self.d2 });
        }
        self.noise.validate()?;
        if self.bases.is_empty() {
            return Err(Error::Config("no run basis selected".into()));
        }
        if self.shots == 0 {
            return Err(Error::Config("shot count must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }

    /// Noiseless circuit for one run basis.
    pub fn circuit(&self, run: RunBasis) -> Result<Circuit> {
        let l1 = build_layout(self.code_type, self.structure, self.d1)?;
        let l2 = build_layout(self.code_type, self.structure, self.d2)?;
        let regions = assign_regions(&l2, self.init_method, self.d1, self.d2)?;
        build_injection_circuit(&l1, &l2, &regions, run)
    }

    pub fn noisy_circuit(&self, run: RunBasis) -> Result<Circuit> {
        attach_noise(&self.circuit(run)?, &self.noise)
    }

    /// Seed of the sampling stream of one basis.
    pub fn basis_seed(&self, run: RunBasis) -> u64 {
        splitmix64(self.seed ^ (run as u64 + 1).wrapping_mul(0xa076_1d64_78bd_642f))
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A binomial rate with its standard error `sqrt(e (1 - e) / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// `None` when `n == 0`.
    pub fn from_counts(hits: u64, n: u64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let e = hits as f64 / n as f64;
        Some(Estimate { value: e, std_err: (e * (1.0 - e) / n as f64).sqrt() })
    }
}

/// Probability that neither a logical X nor a logical Z error occurred,
/// complemented.
pub fn total_error(e_x: f64, e_z: f64) -> f64 {
    1.0 - (1.0 - e_x) * (1.0 - e_z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisResult {
    pub run: RunBasis,
    pub total_shots: u64,
    pub accepted_shots: u64,
    pub logical_flips: u64,
    /// Accepted shots the decoder could not match; counted as "no flip".
    pub decode_failures: u64,
    pub estimate: Option<Estimate>,
}

impl BasisResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.total_shots == 0 {
            0.0
        } else {
            self.accepted_shots as f64 / self.total_shots as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: InjectionConfig,
    pub z_run: Option<BasisResult>,
    pub x_run: Option<BasisResult>,
    pub e_x: Option<Estimate>,
    pub e_z: Option<Estimate>,
    /// Only when both bases produced an estimate.
    pub e_total: Option<f64>,
    /// Pooled over the runs that were made.
    pub acceptance_rate: f64,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    /// Some requested basis accepted no shot at all.
    pub fn no_acceptance(&self) -> bool {
        [&self.z_run, &self.x_run].into_iter().flatten().any(|r| r.total_shots > 0 && r.accepted_shots == 0)
    }

    fn assemble(config: InjectionConfig, runs: Vec<BasisResult>, wall_time_s: f64) -> Self {
        let find = |b: RunBasis| runs.iter().find(|r| r.run == b).cloned();
        let z_run = find(RunBasis::ZRun);
        let x_run = find(RunBasis::XRun);
        let e_x = z_run.as_ref().and_then(|r| r.estimate);
        let e_z = x_run.as_ref().and_then(|r| r.estimate);
        let e_total = match (e_x, e_z) {
            (Some(x), Some(z)) => Some(total_error(x.value, z.value)),
            _ => None,
        };
        let total: u64 = runs.iter().map(|r| r.total_shots).sum();
        let accepted: u64 = runs.iter().map(|r| r.accepted_shots).sum();
        let acceptance_rate = if total == 0 { 0.0 } else { accepted as f64 / total as f64 };
        ExperimentResult { config, z_run, x_run, e_x, e_z, e_total, acceptance_rate, wall_time_s }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    accepted: u64,
    flips: u64,
    failures: u64,
}

fn lane_mask(shots: usize, word: usize) -> u64 {
    let left = shots - word * 64;
    if left >= 64 {
        u64::MAX
    } else {
        (1u64 << left) - 1
    }
}

fn tally_batch(batch: &ShotBatch, stage_one: &[usize], stage_two: &[usize], decoder: &Decoder<f64>) -> Tally {
    let words = batch.words;
    let mut accept: Vec<u64> = (0..words).map(|w| lane_mask(batch.shots, w)).collect();
    for &d in stage_one {
        for (a, e) in accept.iter_mut().zip(batch.detector_words(d)) {
            *a &= !e;
        }
    }
    let mut fired: Vec<Vec<usize>> = vec![Vec::new(); batch.shots];
    for &d in stage_two {
        for (w, (a, e)) in accept.iter().zip(batch.detector_words(d)).enumerate() {
            let mut bits = a & e;
            while bits != 0 {
                fired[w * 64 + bits.trailing_zeros() as usize].push(d);
                bits &= bits - 1;
            }
        }
    }
    let accepted: Vec<usize> = (0..batch.shots).filter(|&s| accept[s / 64] >> (s % 64) & 1 == 1).collect();
    let (flips, failures) = accepted
        .par_iter()
        .map(|&s| {
            let (predicted, failed) = if fired[s].is_empty() {
                (false, false)
            } else {
                match decoder.decode(&fired[s]) {
                    Ok(c) => (c.flip, false),
                    Err(_) => (false, true),
                }
            };
            ((predicted != batch.observable(s)) as u64, failed as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Tally { accepted: accepted.len() as u64, flips, failures }
}

/// Sample, post-select and decode one compiled noisy circuit.
pub fn run_circuit(circuit: &Circuit, run: RunBasis, shots: usize, seed: u64, batch_size: usize) -> Result<BasisResult> {
    let graph: DetectorGraph<f64> = DetectorGraph::build(circuit)?;
    let decoder = Decoder::new(&graph);
    let stage_one: Vec<usize> = circuit.stage_one_detectors().collect();
    let stage_two: Vec<usize> = circuit.stage_two_detectors().collect();
    let mut t = Tally::default();
    // batches run one after another to bound memory; decoding is parallel
    for (k, n) in batch_plan(shots, batch_size).into_iter().enumerate() {
        let batch = sample_batch(circuit, seed, k as u64, n)?;
        let b = tally_batch(&batch, &stage_one, &stage_two, &decoder);
        t.accepted += b.accepted;
        t.flips += b.flips;
        t.failures += b.failures;
    }
    Ok(BasisResult {
        run,
        total_shots: shots as u64,
        accepted_shots: t.accepted,
        logical_flips: t.flips,
        decode_failures: t.failures,
        estimate: Estimate::from_counts(t.flips, t.accepted),
    })
}

/// Run every requested basis of `config`. Zero accepted shots is reported
/// through [`ExperimentResult::no_acceptance`], not as an error.
pub fn run(config: &InjectionConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let mut bases = config.bases.clone();
    bases.sort();
    bases.dedup();
    let runs = bases
        .iter()
        .map(|&b| {
            let circuit = config.noisy_circuit(b)?;
            run_circuit(&circuit, b, config.shots, config.basis_seed(b), config.batch_size)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult::assemble(config.clone(), runs, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_error_combines_independently() {
        assert!((total_error(0.1, 0.2) - 0.28).abs() < 1e-15);
        assert_eq!(total_error(0.0, 0.0), 0.0);
    }

    #[test]
    fn standard_error_matches_binomial() {
        let e = Estimate::from_counts(25, 100).unwrap();
        assert_eq!(e.value, 0.25);
        assert!((e.std_err - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(Estimate::from_counts(0, 0).is_none());
    }

    #[test]
    fn zero_noise_accepts_everything() {
        let cfg = InjectionConfig {
            noise: NoiseParams::new(0.0, Bias::depolarizing()).unwrap(),
            shots: 1000,
            ..Default::default()
        };
        let r = run(&cfg).unwrap();
        assert_eq!(r.acceptance_rate, 1.0);
        assert_eq!(r.e_total, Some(0.0));
        assert!(!r.no_acceptance());
    }

    #[test]
    fn basis_seeds_differ() {
        let cfg = InjectionConfig::default();
        assert_ne!(cfg.basis_seed(RunBasis::ZRun), cfg.basis_seed(RunBasis::XRun));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = InjectionConfig { d1: 5, d2: 3, ..Default::default() };
        assert!(matches!(run(&cfg), Err(Error::DistanceOrder { .. })));
        let cfg = InjectionConfig { bases: vec![], ..Default::default() };
        assert!(run(&cfg).is_err());
    }
}
