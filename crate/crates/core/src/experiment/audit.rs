//! Structural audits of one configuration, reported as pass/fail per check.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::InjectionConfig;
use crate::circuit::{circuits_equivalent, schedule_round, unmirrored_flags, Circuit, InitMethod, Instruction, RunBasis, Stage};
use crate::decoder::{DetectorGraph, Decoder, BRUTE_FORCE_LIMIT};
use crate::error::Result;
use crate::layout::{build_layout, commutes, CodeLayout, Structure};
use crate::noise::{attach_noise, NoiseParams};
use crate::sim::{find_blind_qubits, propagate_faults, single_faults};

/// Random syndromes per basis for the decoder oracle.
pub const ORACLE_SYNDROMES: usize = 200;
const MAX_ORACLE_FIRED: usize = 10;
const MAX_DROPPED_FRACTION: f64 = 0.01;
const CHANNEL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: InjectionConfig,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn push(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        self.checks.push(Check { name: name.into(), status, detail: detail.into() });
    }

    fn skip(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), status: CheckStatus::Skipped, detail: detail.into() });
    }
}

fn layout_violations(l: &CodeLayout) -> Vec<String> {
    let mut v = Vec::new();
    let stabs: Vec<_> = l.stabilizers.iter().map(|s| l.stabilizer_pauli(s)).collect();
    let lx = l.logical_pauli(&l.logical_x);
    let lz = l.logical_pauli(&l.logical_z);
    for (i, a) in stabs.iter().enumerate() {
        for b in &stabs[i + 1..] {
            if !commutes(a, b) {
                v.push(format!("stabilizers of {} anticommute", l.stabilizers[i].syndrome));
            }
        }
        if !commutes(a, &lx) || !commutes(a, &lz) {
            v.push(format!("stabilizer {} anticommutes with a logical", l.stabilizers[i].syndrome));
        }
    }
    if commutes(&lx, &lz) {
        v.push("logical X and Z commute".into());
    }
    let max = match l.structure {
        Structure::Lattice => 4,
        Structure::HeavyHexagon => 3,
    };
    if l.max_degree() > max {
        v.push(format!("degree {} exceeds {max}", l.max_degree()));
    }
    v
}

/// Circuit qubit `q` of `a` mapped to the qubit of `b` at the transposed
/// coordinate.
fn transpose_map(a: &CodeLayout, b: &CodeLayout) -> Option<Vec<usize>> {
    a.qubits.iter().map(|q| b.qubit_at(q.coord.transpose()).map(|t| t.0)).collect()
}

fn noise_count_ok(noisy: &Circuit) -> (bool, String) {
    let ops = noisy.count_where(|i| {
        matches!(
            i,
            Instruction::ResetZ(_)
                | Instruction::Hadamard(_)
                | Instruction::Cnot(..)
                | Instruction::Cz(..)
                | Instruction::MeasureZ { .. }
        )
    });
    let locs = noisy.noise_location_count();
    (ops == locs, format!("{locs} noise locations for {ops} operations"))
}

/// Run every audit on `config`. Noise-dependent checks use the configured
/// noise, or `p2 = 0.1%` at the same bias if the configuration is noiseless.
pub fn verify(config: &InjectionConfig) -> Result<AuditReport> {
    config.validate()?;
    let mut report = AuditReport { config: config.clone(), checks: Vec::new() };
    let l1 = build_layout(config.code_type, config.structure, config.d1)?;
    let l2 = build_layout(config.code_type, config.structure, config.d2)?;

    let mut v = layout_violations(&l1);
    v.extend(layout_violations(&l2));
    report.push("layout_commutation_and_degree", v.is_empty(), v.join("; "));

    let noise = if config.noise.p_double > 0.0 {
        config.noise.clone()
    } else {
        NoiseParams::new(0.001, config.noise.eta)?
    };
    let single = noise.single_channel()?.total();
    let double = noise.double_channel()?.total();
    let ok = (single - noise.p_single).abs() <= CHANNEL_TOLERANCE && (double - noise.p_double).abs() <= CHANNEL_TOLERANCE;
    report.push("channel_normalization", ok, format!("single {single:e}, double {double:e}"));

    let unmirrored = unmirrored_flags(&l2, &schedule_round(&l2));
    report.push(
        "flag_symmetry",
        unmirrored.is_empty(),
        format!("{} flags, unmirrored {:?}", l2.flag_qubits().count(), unmirrored),
    );

    // blind qubits over both runs, and the pairing partner
    let blind = |method: InitMethod| -> Result<BTreeSet<usize>> {
        let cfg = InjectionConfig { init_method: method, ..config.clone() };
        let mut all = BTreeSet::new();
        for run in RunBasis::BOTH {
            all.extend(find_blind_qubits(&cfg.circuit(run)?));
        }
        Ok(all)
    };
    let mine = blind(config.init_method)?;
    let partner = match config.init_method {
        InitMethod::RightTriangle => InitMethod::DownSquare,
        InitMethod::DownSquare => InitMethod::RightTriangle,
        InitMethod::RightSquare => InitMethod::DownTriangle,
        InitMethod::DownTriangle => InitMethod::RightSquare,
    };
    let theirs = blind(partner)?;
    let coords: Vec<_> = mine.iter().map(|&q| l2.coord(crate::layout::QubitId(q))).collect();
    if config.d1 == 3 {
        report.push("blind_qubit_count", mine.len() == 1, format!("blind qubits {mine:?} at {coords:?}"));
    } else {
        report.skip("blind_qubit_count", format!("exact count is only fixed at d1 = 3; found {mine:?}"));
    }
    report.push("blind_qubit_pairing", mine == theirs, format!("{config_m} {mine:?} vs {partner} {theirs:?}", config_m = config.init_method));

    if config.structure == Structure::Lattice && config.code_type != crate::layout::CodeType::Surface {
        let other = InjectionConfig {
            code_type: config.code_type.reflected(),
            init_method: config.init_method.reflected(),
            ..config.clone()
        };
        let lo = build_layout(other.code_type, other.structure, other.d2)?;
        let mut ok = true;
        if let Some(map) = transpose_map(&l2, &lo) {
            for run in RunBasis::BOTH {
                ok &= circuits_equivalent(&config.circuit(run)?.relabel(&map), &other.circuit(run)?);
            }
        } else {
            ok = false;
        }
        report.push(
            "circuit_isomorphism",
            ok,
            format!("{} {} vs {} {}", config.code_type, config.init_method, other.code_type, other.init_method),
        );
    } else {
        report.skip("circuit_isomorphism", "only lattice XZZX/ZXXZ pairs are mirror images");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for run in RunBasis::BOTH {
        let tag = run.name();
        let circuit = attach_noise(&config.circuit(run)?, &noise)?;
        let (ok, detail) = noise_count_ok(&circuit);
        report.push(&format!("noise_locations_{tag}"), ok, detail);

        let graph: DetectorGraph<f64> = DetectorGraph::build(&circuit)?;
        let frac = graph.dropped_fraction();
        report.push(
            &format!("dropped_mass_{tag}"),
            frac < MAX_DROPPED_FRACTION,
            format!("{} mechanisms, fraction {frac:.3e}", graph.dropped_mechanisms),
        );

        let decoder = Decoder::new(&graph);
        let nodes = &graph.nodes;
        let mut mismatches = Vec::new();
        for _ in 0..ORACLE_SYNDROMES {
            let k = rng.gen_range(1..=MAX_ORACLE_FIRED.min(BRUTE_FORCE_LIMIT).min(nodes.len()));
            let fired: Vec<usize> = sample(&mut rng, nodes.len(), k).into_iter().map(|i| nodes[i]).collect();
            let a = decoder.decode(&fired).map(|c| c.weight);
            let b = decoder.brute_force(&fired).map(|c| c.weight);
            if a != b {
                mismatches.push(format!("{fired:?}: {a:?} vs {b:?}"));
            }
        }
        report.push(
            &format!("decoder_oracle_{tag}"),
            mismatches.is_empty(),
            format!("{ORACLE_SYNDROMES} syndromes, mismatches {mismatches:?}"),
        );

        // exhaustive single faults: Stage II must be first-order fault tolerant
        let faults = single_faults(&circuit);
        let effects = propagate_faults(&circuit, &faults.iter().map(|f| f.2.clone()).collect::<Vec<_>>());
        let stage_two = circuit.stage_two_start();
        let mut wrong = Vec::new();
        let mut undetected = Vec::new();
        let mut decoded = 0usize;
        for ((loc, label, _), e) in faults.iter().zip(&effects) {
            if e.detectors.iter().any(|&d| circuit.detectors[d].stage == Stage::I) {
                continue;
            }
            if e.detectors.is_empty() {
                if e.observable && *loc >= stage_two {
                    undetected.push(format!("{loc}:{label:?}"));
                }
                continue;
            }
            decoded += 1;
            match decoder.decode(&e.detectors) {
                Ok(c) if c.flip == e.observable => {}
                other => wrong.push(format!("{loc}:{label:?} -> {:?}", other.map(|c| c.flip))),
            }
        }
        report.push(
            &format!("single_fault_coverage_{tag}"),
            undetected.is_empty(),
            format!("{} faults, undetected Stage-II logical {undetected:?}", faults.len()),
        );
        report.push(
            &format!("single_fault_correction_{tag}"),
            wrong.is_empty(),
            format!("{decoded} decoded, wrong {:?}", wrong.iter().take(10).collect::<Vec<_>>()),
        );
    }
    Ok(report)
}
