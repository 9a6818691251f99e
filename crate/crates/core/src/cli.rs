//! The `molspec` command line.
//!
//! Parameters come from three layers, later ones winning: built-in
//! defaults, a flat TOML file given with `--config`, and flags. The merged
//! layer is a [`RunConfig`]; unknown keys in the file are rejected.
//!
//! Mesh dumps are a single JSON object
//! `{"schema": "molspec.mesh/1", "spec", "atoms", "snapped_atoms", "mesh"}`
//! where `mesh` holds `nodes`, `triangles` (CCW node triples),
//! `edge_groups` (`tag`, optional `robin`, `chains` of node pairs), `pitch`
//! and `lattice`. With `--coo PREFIX` the reduced operator and mass matrix
//! go to `PREFIX.A.coo` and `PREFIX.M.coo`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::assembly::{SigmaProfile, SigmaSpec};
use crate::experiments::default_tau;
use crate::experiments::ground_state::strip_forms;
use crate::experiments::monte_carlo::McParams;
use crate::experiments::report::{
    replay, run_appendix, run_converge, run_destruction, run_gamma, run_mc, run_sample_record, run_solve,
    write_csv, AppendixInputs, ConvergeInputs, DestructionInputs, GammaInputs, SampleInputs, SigmaInput,
    SolveInputs,
};
use crate::experiments::{ExperimentError, ExperimentReport, Record};
use crate::geometry::StripSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub const MESH_SCHEMA: &str = "molspec.mesh/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

/// Every key a config file may set. All optional; unset keys fall back to
/// the subcommand's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(rename = "L_list", skip_serializing_if = "Option::is_none")]
    pub l_list: Option<Vec<f64>>,
    #[serde(rename = "M_list", skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&self, over: &RunConfig) -> RunConfig {
        let mut base = to_map(self);
        base.extend(to_map(over));
        serde_json::from_value(Value::Object(base)).expect("overlay of valid configs is valid")
    }
}

fn to_map<S: Serialize>(value: &S) -> Map<String, Value> {
    match serde_json::to_value(value).expect("config serializes") {
        Value::Object(map) => map,
        _ => unreachable!("configs are structs"),
    }
}

/// `inf`, a number, `pw:v0,b1,v1,...`, or several of these joined by `;`
/// (one per atom).
pub fn parse_sigma(text: &str) -> Result<SigmaInput, String> {
    let parse = |t: &str| t.parse::<SigmaProfile<f64>>().map(SigmaSpec).map_err(|e| e.to_string());
    if text.contains(';') {
        Ok(SigmaInput::PerAtom(text.split(';').map(parse).collect::<Result<_, _>>()?))
    } else {
        Ok(SigmaInput::Uniform(parse(text)?))
    }
}

#[derive(Debug, Parser)]
#[command(name = "molspec", version, about = "Spectra of a two-particle molecule on the half-line with random delta-line interactions")]
pub struct Cli {
    /// Flat TOML file with parameter defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Rerun every report in a JSON-lines file and check the outputs match.
    #[arg(long, value_name = "REPORT")]
    pub replay: Option<PathBuf>,
    /// Worker threads for Monte-Carlo runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Add wall_clock_s to the last report (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print one atom configuration.
    Sample(SampleArgs),
    /// Lowest eigenvalues of one strip configuration.
    Solve(SolveArgs),
    /// Monte-Carlo class frequencies with Wilson intervals.
    Mc(McArgs),
    /// Refinement study with extrapolated ground state.
    Converge(ConvergeArgs),
    /// Coupling threshold estimate from the subdomain bounds.
    Gamma(GammaArgs),
    /// Single-atom FEM classification against the subdomain bounds.
    Destruction(DestructionArgs),
    /// Randomized scaling-inequality checks and the comparison table.
    Appendix(AppendixArgs),
    /// Mesh JSON (and optional COO matrices) for one strip configuration.
    MeshDump(MeshDumpArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Sampling stops past this point (default L + d).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stream index under the master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct StripArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Grid cells per width d.
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Atom positions, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<f64>>,
    /// Coupling: number, inf, pw:v0,b1,v1,...; `;` separates per-atom values.
    #[arg(long, value_parser = parse_sigma)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaInput>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub strip: StripArgs,
    /// Number of eigenpairs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long, value_parser = parse_sigma)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaInput>,
    /// Number of samples.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_sigma)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaInput>,
    #[arg(long = "L-list", value_delimiter = ',')]
    #[serde(rename = "L_list", skip_serializing_if = "Option::is_none")]
    pub l_list: Option<Vec<f64>>,
    #[arg(long = "M-list", value_delimiter = ',')]
    #[serde(rename = "M_list", skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Dissection lines in the window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// FEM cells per triangle leg.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct DestructionArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long = "a-k")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_k: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct AppendixArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MeshDumpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub strip: StripArgs,
    /// Also write the reduced operator and mass to PREFIX.A.coo / PREFIX.M.coo.
    #[arg(long, value_name = "PREFIX")]
    #[serde(skip)]
    pub coo: Option<PathBuf>,
}

/// Failures that map to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(argv) {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(parsed) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (CliError::Config(msg) | CliError::Solver(msg)) = &e;
            eprintln!("error: {msg}");
            e.exit_code()
        }
    }
}

fn flags_config<S: Serialize>(args: &S) -> Result<RunConfig, CliError> {
    serde_json::from_value(Value::Object(to_map(args))).map_err(|e| CliError::Config(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let globals = RunConfig { jobs: cli.jobs, format: cli.format, output: cli.output.clone(), ..RunConfig::default() };
    let start = Instant::now();

    if let Some(path) = &cli.replay {
        if cli.command.is_some() {
            return Err(CliError::Config("--replay takes no subcommand".into()));
        }
        let cfg = file_cfg.overlay(&globals);
        let reports = replay_file(path, cfg.jobs.unwrap_or(1))?;
        return emit(&cfg, reports, cli.timing.then(|| start.elapsed().as_secs_f64()));
    }

    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (try --help)".into()));
    };
    let flags = match &command {
        Command::Sample(a) => flags_config(a)?,
        Command::Solve(a) => flags_config(a)?,
        Command::Mc(a) => flags_config(a)?,
        Command::Converge(a) => flags_config(a)?,
        Command::Gamma(a) => flags_config(a)?,
        Command::Destruction(a) => flags_config(a)?,
        Command::Appendix(a) => flags_config(a)?,
        Command::MeshDump(a) => flags_config(a)?,
    };
    let cfg = file_cfg.overlay(&globals).overlay(&flags);
    let jobs = cfg.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }

    let records = match &command {
        Command::Sample(_) => vec![run_sample_record(&sample_inputs(&cfg))?],
        Command::Solve(_) => vec![run_solve(&solve_inputs(&cfg))?],
        Command::Mc(_) => run_mc(&mc_params(&cfg)?, jobs)?,
        Command::Converge(_) => vec![run_converge(&converge_inputs(&cfg))?],
        Command::Gamma(_) => vec![run_gamma(&gamma_inputs(&cfg))?],
        Command::Destruction(_) => vec![run_destruction(&destruction_inputs(&cfg))?],
        Command::Appendix(_) => {
            let rec = run_appendix(&appendix_inputs(&cfg))?;
            if let Record::Appendix { output, .. } = &rec {
                for check in [&output.a1, &output.a2] {
                    eprintln!(
                        "{:?} violations: {} ({} trials, identity error {:e})",
                        check.proposition, check.violations, check.trials, check.identity_error
                    );
                }
            }
            vec![rec]
        }
        Command::MeshDump(args) => return mesh_dump(&cfg, args.coo.as_deref()),
    };
    let reports = records.into_iter().map(ExperimentReport::new).collect();
    emit(&cfg, reports, cli.timing.then(|| start.elapsed().as_secs_f64()))
}

fn replay_file(path: &Path, jobs: usize) -> Result<Vec<ExperimentReport>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let originals = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(ExperimentReport::from_json_line)
        .collect::<Result<Vec<_>, _>>()?;
    if originals.is_empty() {
        return Err(CliError::Config(format!("{}: no reports", path.display())));
    }
    Ok(originals.iter().map(|r| replay(r, jobs)).collect::<Result<Vec<_>, _>>()?)
}

fn emit(cfg: &RunConfig, mut reports: Vec<ExperimentReport>, elapsed: Option<f64>) -> Result<(), CliError> {
    if let (Some(t), Some(last)) = (elapsed, reports.last_mut()) {
        last.wall_clock_s = Some(t);
    }
    let mut buf = Vec::new();
    match cfg.format.unwrap_or(Format::Jsonl) {
        Format::Jsonl => {
            for r in &reports {
                buf.extend_from_slice(r.to_json_line().as_bytes());
                buf.push(b'\n');
            }
        }
        Format::Csv => write_csv(&reports, &mut buf).map_err(|e| CliError::Config(e.to_string()))?,
    }
    write_out(cfg.output.as_deref(), &buf)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

const DEFAULT_D: f64 = 1.0;
const DEFAULT_L: f64 = 6.0;
const DEFAULT_M: usize = 16;

fn uniform_zero() -> SigmaInput {
    SigmaInput::Uniform(SigmaSpec(SigmaProfile::constant(0.0)))
}

fn sample_inputs(cfg: &RunConfig) -> SampleInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    SampleInputs {
        nu: cfg.nu.unwrap_or(1.0),
        horizon: cfg.horizon.unwrap_or(cfg.l.unwrap_or(DEFAULT_L * d) + d),
        master_seed: cfg.seed.unwrap_or(0),
        stream_index: cfg.index.unwrap_or(0),
    }
}

fn solve_inputs(cfg: &RunConfig) -> SolveInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    SolveInputs {
        d,
        l: cfg.l.unwrap_or(DEFAULT_L * d),
        m: cfg.m.unwrap_or(DEFAULT_M),
        atoms: cfg.atoms.clone().unwrap_or_default(),
        sigma: cfg.sigma.clone().unwrap_or_else(uniform_zero),
        count: cfg.count.unwrap_or(1),
        tau: cfg.tau.unwrap_or_else(|| default_tau(d)),
    }
}

fn mc_params(cfg: &RunConfig) -> Result<McParams, CliError> {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    let sigma = match cfg.sigma.clone().unwrap_or_else(uniform_zero) {
        SigmaInput::Uniform(s) => s,
        SigmaInput::PerAtom(_) => return Err(CliError::Config("mc takes one sigma for all atoms".into())),
    };
    Ok(McParams {
        nu: cfg.nu.unwrap_or(1.0),
        d,
        sigma,
        n: cfg.n.unwrap_or(200),
        master_seed: cfg.seed.unwrap_or(0),
        l: cfg.l.unwrap_or(DEFAULT_L * d),
        m: cfg.m.unwrap_or(DEFAULT_M),
        tau: cfg.tau.unwrap_or_else(|| default_tau(d)),
    })
}

fn converge_inputs(cfg: &RunConfig) -> ConvergeInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    ConvergeInputs {
        d,
        atoms: cfg.atoms.clone().unwrap_or_default(),
        sigma: cfg.sigma.clone().unwrap_or_else(uniform_zero),
        l_list: cfg.l_list.clone().unwrap_or_else(|| vec![4.0 * d, 6.0 * d, 8.0 * d]),
        m_list: cfg.m_list.clone().unwrap_or_else(|| vec![8, 16, 32]),
    }
}

fn gamma_inputs(cfg: &RunConfig) -> GammaInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    GammaInputs {
        d,
        eta: cfg.eta.unwrap_or(1.05),
        delta: cfg.delta.unwrap_or(0.02 * d),
        points: cfg.points.unwrap_or(9),
        cells: cfg.cells.unwrap_or(32),
    }
}

fn destruction_inputs(cfg: &RunConfig) -> DestructionInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    DestructionInputs {
        d,
        a_k: cfg.a_k.unwrap_or(0.45 * d),
        gamma: cfg.gamma.unwrap_or(1e4),
        l: cfg.l.unwrap_or(DEFAULT_L * d),
        m: cfg.m.unwrap_or(20),
        tau: cfg.tau.unwrap_or_else(|| default_tau(d)),
        cells: cfg.cells.unwrap_or(32),
    }
}

fn appendix_inputs(cfg: &RunConfig) -> AppendixInputs {
    let d = cfg.d.unwrap_or(DEFAULT_D);
    AppendixInputs {
        trials: cfg.trials.unwrap_or(1000),
        seed: cfg.seed.unwrap_or(0),
        d,
        eta: cfg.eta.unwrap_or(1.05),
        delta: cfg.delta.unwrap_or(0.02 * d),
    }
}

fn mesh_dump(cfg: &RunConfig, coo: Option<&Path>) -> Result<(), CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Config("mesh-dump writes JSON only".into()));
    }
    let inputs = solve_inputs(cfg);
    let spec = StripSpec::new(inputs.d, inputs.l, inputs.m).map_err(ExperimentError::from)?;
    let (mesh, forms, snapped, _) = strip_forms(&spec, &inputs.atoms, &inputs.sigma.assignment())?;
    if let Some(prefix) = coo {
        for (suffix, matrix) in [("A.coo", forms.operator()), ("M.coo", forms.mass.clone())] {
            let path = PathBuf::from(format!("{}.{suffix}", prefix.display()));
            fs::write(&path, matrix.to_coo_text()).map_err(|e| io_err(&path, e))?;
        }
    }
    let doc = json!({
        "schema": MESH_SCHEMA,
        "spec": spec,
        "atoms": inputs.atoms,
        "snapped_atoms": snapped,
        "mesh": mesh,
    });
    let mut text = serde_json::to_string(&doc).expect("mesh serializes");
    text.push('\n');
    write_out(cfg.output.as_deref(), text.as_bytes())
}
