//! Cartesian parameter sweeps written to a resumable CSV.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, splitmix64, InjectionConfig, DEFAULT_SHOTS};
use crate::circuit::{InitMethod, RunBasis};
use crate::error::{Error, Result};
use crate::layout::{CodeType, Structure};
use crate::noise::{Bias, NoiseParams};
use crate::sim::DEFAULT_BATCH_SIZE;

/// Rows always use the default batch size: batch boundaries pick the RNG
/// streams, and a row must regenerate from its seed and key alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub codes: Vec<CodeType>,
    pub structures: Vec<Structure>,
    pub methods: Vec<InitMethod>,
    pub etas: Vec<Bias<f64>>,
    pub p2s: Vec<f64>,
    pub d1: usize,
    pub d2s: Vec<usize>,
    pub shots: usize,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            codes: CodeType::ALL.to_vec(),
            structures: Structure::ALL.to_vec(),
            methods: InitMethod::ALL.to_vec(),
            etas: [0.5, 1.0, 5.0, 10.0, 100.0].into_iter().map(Bias::Finite).collect(),
            p2s: vec![0.0005, 0.001, 0.0025, 0.005, 0.01],
            d1: 3,
            d2s: vec![3, 5, 7, 9],
            shots: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.codes.len() * self.structures.len() * self.methods.len() * self.etas.len() * self.p2s.len() * self.d2s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point with its derived row seed.
    pub fn configs(&self) -> Result<Vec<InjectionConfig>> {
        let mut out = Vec::with_capacity(self.len());
        for &code_type in &self.codes {
            for &structure in &self.structures {
                for &d2 in &self.d2s {
                    for &init_method in &self.methods {
                        for &eta in &self.etas {
                            for &p2 in &self.p2s {
                                let mut cfg = InjectionConfig {
                                    code_type,
                                    structure,
                                    d1: self.d1,
                                    d2,
                                    init_method,
                                    noise: NoiseParams::new(p2, eta)?,
                                    shots: self.shots,
                                    seed: 0,
                                    bases: RunBasis::BOTH.to_vec(),
                                    batch_size: DEFAULT_BATCH_SIZE,
                                };
                                cfg.seed = row_seed(self.seed, &row_key(&cfg));
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `code|structure|d1|d2|init|eta|p2`.
pub fn row_key(cfg: &InjectionConfig) -> String {
    format!(
        "{}|{}|{}|{}|{}|{}|{}",
        cfg.code_type.name(),
        cfg.structure.name(),
        cfg.d1,
        cfg.d2,
        cfg.init_method.name(),
        cfg.noise.eta,
        cfg.noise.p_double
    )
}

/// Row seed from the master seed and the row key (FNV-1a, then splitmix).
pub fn row_seed(master: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

/// One CSV line. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub code: String,
    pub structure: String,
    pub d1: usize,
    pub d2: usize,
    pub init: String,
    pub eta: String,
    pub p2: f64,
    pub p1: f64,
    pub p_readout: f64,
    pub shots: usize,
    pub accepted_z: u64,
    pub accepted_x: u64,
    pub ex: Option<f64>,
    pub ex_se: Option<f64>,
    pub ez: Option<f64>,
    pub ez_se: Option<f64>,
    pub etotal: Option<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "code,structure,d1,d2,init,eta,p2,p1,p_readout,shots,accepted_z,accepted_x,ex,ex_se,ez,ez_se,etotal,seed";

impl SweepRow {
    pub fn from_result(r: &super::ExperimentResult) -> Self {
        let c = &r.config;
        SweepRow {
            code: c.code_type.name().into(),
            structure: c.structure.name().into(),
            d1: c.d1,
            d2: c.d2,
            init: c.init_method.name().into(),
            eta: c.noise.eta.to_string(),
            p2: c.noise.p_double,
            p1: c.noise.p_single,
            p_readout: c.noise.p_readout,
            shots: c.shots,
            accepted_z: r.z_run.as_ref().map_or(0, |b| b.accepted_shots),
            accepted_x: r.x_run.as_ref().map_or(0, |b| b.accepted_shots),
            ex: r.e_x.map(|e| e.value),
            ex_se: r.e_x.map(|e| e.std_err),
            ez: r.e_z.map(|e| e.value),
            ez_se: r.e_z.map(|e| e.std_err),
            etotal: r.e_total,
            seed: c.seed,
        }
    }

    /// The configuration that regenerates this row.
    pub fn config(&self) -> Result<InjectionConfig> {
        let bad = |what: &str, v: &str| Error::Config(format!("unknown {what} `{v}` in sweep row"));
        let noise = NoiseParams::new(self.p2, Bias::parse(&self.eta)?)?.with_single(self.p1)?.with_readout(self.p_readout)?;
        Ok(InjectionConfig {
            code_type: CodeType::parse(&self.code).ok_or_else(|| bad("code", &self.code))?,
            structure: Structure::parse(&self.structure).ok_or_else(|| bad("structure", &self.structure))?,
            d1: self.d1,
            d2: self.d2,
            init_method: InitMethod::parse(&self.init).ok_or_else(|| bad("init", &self.init))?,
            noise,
            shots: self.shots,
            seed: self.seed,
            bases: RunBasis::BOTH.to_vec(),
            batch_size: DEFAULT_BATCH_SIZE,
        })
    }

    pub fn key(&self) -> String {
        format!("{}|{}|{}|{}|{}|{}|{}", self.code, self.structure, self.d1, self.d2, self.init, self.eta, self.p2)
    }

    fn order(&self, other: &Self) -> Ordering {
        let code = |s: &str| CodeType::ALL.iter().position(|c| c.name() == s);
        let st = |s: &str| Structure::ALL.iter().position(|c| c.name() == s);
        let m = |s: &str| InitMethod::ALL.iter().position(|c| c.name() == s);
        let eta = |s: &str| Bias::parse(s).map(|b| b.to_f64()).unwrap_or(f64::NAN);
        code(&self.code)
            .cmp(&code(&other.code))
            .then(st(&self.structure).cmp(&st(&other.structure)))
            .then(self.d1.cmp(&other.d1))
            .then(self.d2.cmp(&other.d2))
            .then(m(&self.init).cmp(&m(&other.init)))
            .then(eta(&self.eta).total_cmp(&eta(&other.eta)))
            .then(self.p2.total_cmp(&other.p2))
            .then_with(|| self.key().cmp(&other.key()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows_total: usize,
    pub rows_skipped: usize,
    pub rows_run: usize,
    pub no_acceptance: Vec<String>,
    /// `(row key, error)` for rows that failed; other rows are unaffected.
    pub failures: Vec<(String, String)>,
}

fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or("");
    if !first.is_empty() && first.trim() != CSV_HEADER {
        return Err(Error::Config(format!("{} does not have the sweep CSV header", path.display())));
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Run every grid row not already present in `out`, appending each as it
/// finishes, then rewrite the file sorted by row key.
pub fn sweep(grid: &SweepGrid, out: &Path) -> Result<SweepSummary> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let configs = grid.configs()?;
    let existing = if out.exists() { read_rows(out)? } else { Vec::new() };
    let done: BTreeSet<String> = existing.iter().map(SweepRow::key).collect();
    let pending: Vec<&InjectionConfig> = configs.iter().filter(|c| !done.contains(&row_key(c))).collect();

    let mut summary =
        SweepSummary { rows_total: configs.len(), rows_skipped: configs.len() - pending.len(), ..Default::default() };
    if pending.is_empty() {
        return Ok(summary);
    }
    if existing.is_empty() {
        write_rows(out, &[])?;
    }
    let file = OpenOptions::new().append(true).open(out)?;
    let writer = Mutex::new(csv::WriterBuilder::new().has_headers(false).from_writer(file));
    let failures = Mutex::new(Vec::new());
    let starved = Mutex::new(Vec::new());
    pending.par_iter().for_each(|cfg| {
        let key = row_key(cfg);
        let outcome = run(cfg).and_then(|r| {
            if r.no_acceptance() {
                starved.lock().expect("lock").push(key.clone());
            }
            let mut w = writer.lock().expect("lock");
            w.serialize(SweepRow::from_result(&r))?;
            w.flush()?;
            Ok(())
        });
        if let Err(e) = outcome {
            failures.lock().expect("lock").push((key, e.to_string()));
        }
    });
    writer.into_inner().expect("lock").flush()?;

    let mut rows = read_rows(out)?;
    rows.sort_by(SweepRow::order);
    rows.dedup_by(|a, b| a.key() == b.key());
    write_rows(out, &rows)?;

    summary.failures = failures.into_inner().expect("lock");
    summary.failures.sort();
    summary.no_acceptance = starved.into_inner().expect("lock");
    summary.no_acceptance.sort();
    summary.rows_run = pending.len() - summary.failures.len();
    Ok(summary)
}

/// Write helper for callers that already hold results.
pub fn write_csv(rows: &[SweepRow], out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
