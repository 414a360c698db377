//! `hexinject` command line.
//!
//! Flags describe one configuration; `--config FILE` (TOML) overrides them
//! and may give lists for any axis, which `sweep` expands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use hexinject::circuit::{dump_circuit, RunBasis};
use hexinject::decoder::DetectorGraph;
use hexinject::experiment::{run, sweep, verify, InjectionConfig, SweepGrid, DEFAULT_SHOTS};
use hexinject::layout::{build_layout, dump_layout};
use hexinject::noise::{attach_noise, Bias, NoiseParams};
use hexinject::{CodeType, InitMethod, Structure};

const EXIT_INVARIANT: u8 = 2;
const EXIT_NO_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "hexinject", version, about = "Magic state injection on lattice and heavy-hexagon codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one configuration and print the result as JSON.
    Run(Opts),
    /// Run a Cartesian grid into a resumable CSV (`--out`, default sweep.csv).
    Sweep(Opts),
    /// Audit one configuration; exits 2 if any invariant fails.
    Verify(Opts),
    /// Print the d2 layout.
    DumpLayout(Opts),
    /// Print the injection circuit of one basis (noisy unless --noiseless).
    DumpCircuit(Opts),
    /// Print the Stage-II matching graph of one basis.
    DumpGraph(Opts),
}

#[derive(Args, Default, Clone)]
struct Opts {
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    #[arg(long)]
    init: Option<String>,
    /// Bias, a number >= 0.5 or `inf`.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// z, x or both.
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    noiseless: bool,
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum EtaValue {
    Number(f64),
    Text(String),
}

impl EtaValue {
    fn text(&self) -> String {
        match self {
            EtaValue::Number(x) => x.to_string(),
            EtaValue::Text(s) => s.clone(),
        }
    }
}

/// TOML configuration file; every key is optional and wins over its flag.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    code: Option<OneOrMany<String>>,
    structure: Option<OneOrMany<String>>,
    init: Option<OneOrMany<String>>,
    eta: Option<OneOrMany<EtaValue>>,
    p2: Option<OneOrMany<f64>>,
    d1: Option<usize>,
    d2: Option<OneOrMany<usize>>,
    shots: Option<usize>,
    seed: Option<u64>,
    basis: Option<String>,
    out: Option<PathBuf>,
    batch_size: Option<usize>,
}

/// Every axis as a list, after merging flags and file.
struct Axes {
    codes: Vec<CodeType>,
    structures: Vec<Structure>,
    methods: Vec<InitMethod>,
    etas: Vec<Bias<f64>>,
    p2s: Vec<f64>,
    d1: usize,
    d2s: Vec<usize>,
    shots: usize,
    seed: u64,
    bases: Vec<RunBasis>,
    out: Option<PathBuf>,
    batch_size: usize,
}

fn parse_all<T>(names: &[String], what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    names.iter().map(|n| parse(n).with_context(|| format!("unknown {what} `{n}`"))).collect()
}

fn parse_bases(s: &str) -> Result<Vec<RunBasis>> {
    match s {
        "both" => Ok(RunBasis::BOTH.to_vec()),
        other => Ok(vec![RunBasis::parse(other).with_context(|| format!("unknown basis `{other}`"))?]),
    }
}

impl Axes {
    /// Missing axes fall back to the default sweep grid when `grid_defaults`,
    /// else to the default single configuration.
    fn resolve(opts: &Opts, grid_defaults: bool) -> Result<Self> {
        let file: FileConfig = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let pick = |file: Option<Vec<String>>, flag: &Option<String>| file.or_else(|| flag.clone().map(|f| vec![f]));
        let grid = SweepGrid::default();
        let single = InjectionConfig::default();

        let codes = match pick(file.code.map(OneOrMany::into_vec), &opts.code) {
            Some(v) => parse_all(&v, "code", CodeType::parse)?,
            None if grid_defaults => grid.codes,
            None => vec![single.code_type],
        };
        let structures = match pick(file.structure.map(OneOrMany::into_vec), &opts.structure) {
            Some(v) => parse_all(&v, "structure", Structure::parse)?,
            None if grid_defaults => grid.structures,
            None => vec![single.structure],
        };
        let methods = match pick(file.init.map(OneOrMany::into_vec), &opts.init) {
            Some(v) => parse_all(&v, "init method", InitMethod::parse)?,
            None if grid_defaults => grid.methods,
            None => vec![single.init_method],
        };
        let eta_text = file.eta.map(|e| e.into_vec().iter().map(EtaValue::text).collect());
        let etas = match pick(eta_text, &opts.eta) {
            Some(v) => v.iter().map(|s| Bias::parse(s)).collect::<hexinject::Result<Vec<_>>>()?,
            None if grid_defaults => grid.etas,
            None => vec![single.noise.eta],
        };
        let p2s = match file.p2.map(OneOrMany::into_vec).or(opts.p2.map(|p| vec![p])) {
            Some(v) => v,
            None if grid_defaults => grid.p2s,
            None => vec![single.noise.p_double],
        };
        let d2s = match file.d2.map(OneOrMany::into_vec).or(opts.d2.map(|d| vec![d])) {
            Some(v) => v,
            None if grid_defaults => grid.d2s,
            None => vec![single.d2],
        };
        if grid_defaults && file.batch_size.is_some() {
            // rows must regenerate from (seed, row key) alone
            bail!("batch_size cannot be set for a sweep");
        }
        let bases = match file.basis.as_ref().or(opts.basis.as_ref()) {
            Some(b) => parse_bases(b)?,
            None => RunBasis::BOTH.to_vec(),
        };
        Ok(Axes {
            codes,
            structures,
            methods,
            etas,
            p2s,
            d1: file.d1.or(opts.d1).unwrap_or(single.d1),
            d2s,
            shots: file.shots.or(opts.shots).unwrap_or(DEFAULT_SHOTS),
            seed: file.seed.or(opts.seed).unwrap_or(0),
            bases,
            out: file.out.or_else(|| opts.out.clone()),
            batch_size: file.batch_size.unwrap_or(single.batch_size),
        })
    }

    fn single(&self) -> Result<InjectionConfig> {
        fn one<T: Copy>(v: &[T], what: &str) -> Result<T> {
            match v {
                [x] => Ok(*x),
                _ => bail!("expected exactly one {what}, got {}", v.len()),
            }
        }
        let cfg = InjectionConfig {
            code_type: one(&self.codes, "code")?,
            structure: one(&self.structures, "structure")?,
            d1: self.d1,
            d2: one(&self.d2s, "d2")?,
            init_method: one(&self.methods, "init method")?,
            noise: NoiseParams::new(one(&self.p2s, "p2")?, one(&self.etas, "eta")?)?,
            shots: self.shots,
            seed: self.seed,
            bases: self.bases.clone(),
            batch_size: self.batch_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn grid(&self) -> SweepGrid {
        SweepGrid {
            codes: self.codes.clone(),
            structures: self.structures.clone(),
            methods: self.methods.clone(),
            etas: self.etas.clone(),
            p2s: self.p2s.clone(),
            d1: self.d1,
            d2s: self.d2s.clone(),
            shots: self.shots,
            seed: self.seed,
        }
    }

    fn one_basis(&self) -> Result<RunBasis> {
        match self.bases.as_slice() {
            [b] => Ok(*b),
            _ => Ok(RunBasis::ZRun),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(o) => {
            let axes = Axes::resolve(&o, false)?;
            let result = run(&axes.single()?)?;
            emit(axes.out.as_deref(), &(serde_json::to_string_pretty(&result)? + "\n"))?;
            if result.no_acceptance() {
                eprintln!("no shot passed post-selection");
                return Ok(EXIT_NO_ACCEPTANCE);
            }
        }
        Command::Sweep(o) => {
            let axes = Axes::resolve(&o, true)?;
            let out = axes.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
            let summary = sweep(&axes.grid(), &out)?;
            eprintln!(
                "{} rows: {} run, {} already present, {} failed",
                summary.rows_total,
                summary.rows_run,
                summary.rows_skipped,
                summary.failures.len()
            );
            for (key, err) in &summary.failures {
                eprintln!("row {key} failed: {err}");
            }
            if !summary.failures.is_empty() {
                return Ok(1);
            }
            if !summary.no_acceptance.is_empty() {
                return Ok(EXIT_NO_ACCEPTANCE);
            }
        }
        Command::Verify(o) => {
            let axes = Axes::resolve(&o, false)?;
            let report = verify(&axes.single()?)?;
            emit(axes.out.as_deref(), &(report.to_json() + "\n"))?;
            if !report.passed() {
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::DumpLayout(o) => {
            let axes = Axes::resolve(&o, false)?;
            let cfg = axes.single()?;
            emit(axes.out.as_deref(), &dump_layout(&build_layout(cfg.code_type, cfg.structure, cfg.d2)?))?;
        }
        Command::DumpCircuit(o) => {
            let axes = Axes::resolve(&o, false)?;
            let cfg = axes.single()?;
            let mut circuit = cfg.circuit(axes.one_basis()?)?;
            if !o.noiseless {
                circuit = attach_noise(&circuit, &cfg.noise)?;
            }
            emit(axes.out.as_deref(), &dump_circuit(&circuit))?;
        }
        Command::DumpGraph(o) => {
            let axes = Axes::resolve(&o, false)?;
            let cfg = axes.single()?;
            let graph: DetectorGraph<f64> = DetectorGraph::build(&cfg.noisy_circuit(axes.one_basis()?)?)?;
            emit(axes.out.as_deref(), &graph.dump())?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
