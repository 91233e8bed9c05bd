//! Command-line front end.
//!
//! Every command prints one JSON report with the top-level keys `command`,
//! `input_digest` (SHA-256 of the spec file), `parameters`, `results`,
//! `tolerances` and `version`. Failures keep the same keys and put
//! `{"error": {"code", "message"}}` under `results`.
//!
//! Trajectory CSV columns are `time`, then for each factor `f` either
//! `f{f}_x{i}` (translation coordinates) or `f{f}_m{r}{c}` (matrix entries,
//! row-major).

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checker::{controllability_verdict, g0_structure_report};
use crate::decomposition::{check_grading, DDecomposition};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::reach::{self, ConnectOptions};
use crate::simulator::{ControlSignal, GroupElement, Piece, RealizedSystem, SolveOptions};
use crate::spec_file::{parse_spec, LoadedSpec};
use crate::tolerance::Tolerances;

pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "liectrl", version, about = "Controllability analysis and simulation of linear systems on Lie groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structure constants, derivation, realization and range.
    Validate(Common),
    /// Spectrum of the derivation and the splitting into g⁺, g⁻, g⁰.
    Decompose(Common),
    /// Controllability verdict (exit 0 controllable, 2 a hypothesis fails, 3 inconclusive).
    Check(Common),
    /// Integrate a trajectory from the identity (or --from).
    Simulate(SimulateArgs),
    /// Sample the reachable set and test local accessibility at the identity.
    Reach(ReachArgs),
    /// Search for a control steering --from to --to.
    Connect(ConnectArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    pub spec: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_alg: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_spec: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rank: f64,
    /// Integrator step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            alg: self.tol_alg,
            spec: self.tol_spec,
            rank: self.tol_rank,
            dt: self.dt,
            ..Tolerances::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pieces `duration:u1,u2,...` separated by `;`.
    #[arg(long)]
    pub control: Option<String>,
    /// Total time; zero control pads a shorter --control, a longer one is cut.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Initial state: `identity` or `exp:c1,c2,...` in algebra coordinates.
    #[arg(long, default_value = "identity")]
    pub from: String,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Trajectory file (`.csv` or `.jsonl`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReachArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long = "N", default_value_t = 2000)]
    pub n: usize,
    #[arg(long, env = "LIECTRL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = reach::DEFAULT_PIECES)]
    pub pieces: usize,
    /// Endpoint cloud as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConnectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "identity")]
    pub from: String,
    #[arg(long)]
    pub to: String,
    /// Maximum number of simulated trajectories.
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, env = "LIECTRL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = reach::DEFAULT_PIECES)]
    pub pieces: usize,
    /// Longest total time tried by the search.
    #[arg(long, default_value_t = 20.0)]
    pub tau_max: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub parameters: Value,
    pub results: Value,
    pub tolerances: Tolerances,
    pub version: String,
}

/// A finished command: its report and process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn error_value(e: &Error) -> Value {
    json!({ "error": { "code": e.code(), "message": e.to_string() } })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> std::result::Result<Outcome, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(execute(&cli.command))
}

pub fn execute(cmd: &Command) -> Outcome {
    let (name, common, parameters) = match cmd {
        Command::Validate(c) => ("validate", c, json!({})),
        Command::Decompose(c) => ("decompose", c, json!({})),
        Command::Check(c) => ("check", c, json!({})),
        Command::Simulate(a) => (
            "simulate",
            &a.common,
            json!({ "control": a.control, "T": a.t, "from": a.from, "stride": a.stride, "out": a.out }),
        ),
        Command::Reach(a) => (
            "reach",
            &a.common,
            json!({ "tau": a.tau, "N": a.n, "seed": a.seed, "pieces": a.pieces, "out": a.out }),
        ),
        Command::Connect(a) => (
            "connect",
            &a.common,
            json!({ "from": a.from, "to": a.to, "budget": a.budget, "seed": a.seed, "pieces": a.pieces, "tau_max": a.tau_max }),
        ),
    };
    let tol = common.tolerances();
    let bytes = std::fs::read(&common.spec);
    let input_digest = bytes.as_ref().map(|b| digest(b)).unwrap_or_default();
    let result = bytes
        .map_err(Error::from)
        .and_then(|b| String::from_utf8(b).map_err(|e| Error::parse("$", e.to_string())))
        .and_then(|text| parse_spec(&text, &tol))
        .and_then(|spec| match cmd {
            Command::Validate(_) => cmd_validate(&spec, &tol),
            Command::Decompose(_) => cmd_decompose(&spec, &tol),
            Command::Check(_) => cmd_check(&spec, &tol),
            Command::Simulate(a) => cmd_simulate(&spec, &tol, a),
            Command::Reach(a) => cmd_reach(&spec, &tol, a),
            Command::Connect(a) => cmd_connect(&spec, &tol, a),
        });
    let (results, exit_code) = match result {
        Ok(ok) => ok,
        Err(e) => (error_value(&e), EXIT_ERROR),
    };
    Outcome {
        report: Report {
            command: name.to_string(),
            input_digest,
            parameters,
            results,
            tolerances: tol,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        exit_code,
    }
}

type CmdResult = Result<(Value, i32)>;

pub fn cmd_validate(spec: &LoadedSpec, tol: &Tolerances) -> CmdResult {
    // Loading already rejected anything invalid; this reports the residuals.
    let sys = &spec.system;
    let jacobi = sys.algebra.validate_jacobi(tol);
    let leibniz = sys.algebra.validate_derivation(sys.derivation.matrix(), tol)?;
    let realization = match spec.realized() {
        Ok(_) => json!({ "present": true, "passes": true }),
        Err(Error::UnsupportedRealization(_)) if spec.realization.is_none() => json!({ "present": false }),
        Err(e) => return Err(e),
    };
    Ok((
        json!({
            "name": spec.name(),
            "dim": sys.dim(),
            "channels": sys.channels(),
            "jacobi": jacobi,
            "derivation": leibniz,
            "realization": realization,
            "range": sys.range,
            "passes": jacobi.passes && leibniz.passes,
        }),
        0,
    ))
}

fn basis_json(s: &crate::algebra::Subspace) -> Vec<Vec<f64>> {
    s.basis_vectors().iter().map(|v| v.iter().cloned().collect()).collect()
}

pub fn cmd_decompose(spec: &LoadedSpec, tol: &Tolerances) -> CmdResult {
    let sys = &spec.system;
    let dec = DDecomposition::compute(sys.derivation.matrix(), tol);
    let grading = check_grading(&sys.algebra, &dec, tol)?;
    let g0 = g0_structure_report(sys, tol)?;
    Ok((
        json!({
            "name": spec.name(),
            "spectrum": dec.spectrum.classes,
            "dimensions": {
                "plus": dec.plus.dim(),
                "minus": dec.minus.dim(),
                "zero": dec.zero.dim(),
                "kernel": dec.kernel.dim(),
                "total": sys.dim(),
            },
            "plus": basis_json(&dec.plus),
            "minus": basis_json(&dec.minus),
            "zero": basis_json(&dec.zero),
            "kernel": basis_json(&dec.kernel),
            "plus_nilpotent": sys.algebra.is_nilpotent_subalgebra(&dec.plus, tol),
            "minus_nilpotent": sys.algebra.is_nilpotent_subalgebra(&dec.minus, tol),
            "grading": grading,
            "kernel_structure": g0,
        }),
        0,
    ))
}

pub fn cmd_check(spec: &LoadedSpec, tol: &Tolerances) -> CmdResult {
    let v = controllability_verdict(&spec.system, tol);
    let code = v.conclusion.exit_code();
    let mut value = serde_json::to_value(&v).expect("verdicts serialize");
    value["conclusion_label"] = json!(v.conclusion.label());
    value["name"] = json!(spec.name());
    Ok((value, code))
}

/// Parses `duration:u1,u2;duration:...`.
pub fn parse_control(s: &str, channels: usize) -> Result<ControlSignal> {
    let mut pieces = Vec::new();
    for (i, part) in s.split(';').map(str::trim).filter(|p| !p.is_empty()).enumerate() {
        let bad = |m: &str| Error::InvalidInput(format!("--control piece {i} ({part:?}): {m}"));
        let (d, vals) = part.split_once(':').ok_or_else(|| bad("expected duration:values"))?;
        let duration: f64 = d.trim().parse().map_err(|_| bad("duration is not a number"))?;
        let value = vals
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad("value is not a number")))
            .collect::<Result<Vec<_>>>()?;
        if value.len() != channels {
            return Err(bad(&format!("expected {channels} values")));
        }
        pieces.push(Piece { duration, value });
    }
    ControlSignal::new(pieces)
}

/// Parses `identity` or `exp:c1,c2,...`.
pub fn parse_element(s: &str, rs: &RealizedSystem) -> Result<GroupElement> {
    let s = s.trim();
    if s == "identity" || s == "e" {
        return Ok(rs.identity());
    }
    let coords = s
        .strip_prefix("exp:")
        .ok_or_else(|| Error::InvalidInput(format!("group element {s:?}: expected identity or exp:c1,...")))?;
    let v = coords
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad coordinate {x:?}"))))
        .collect::<Result<Vec<_>>>()?;
    rs.group_exp(&Vector::from_vec(v))
}

fn element_json(g: &GroupElement) -> Value {
    serde_json::to_value(g.parts.iter().map(|p| {
        let m = p.as_matrix();
        (0..m.nrows()).map(|r| m.row(r).iter().cloned().collect::<Vec<_>>()).collect::<Vec<_>>()
    }).collect::<Vec<_>>())
    .expect("numbers serialize")
}

fn write_to(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))
}

pub fn cmd_simulate(spec: &LoadedSpec, tol: &Tolerances, a: &SimulateArgs) -> CmdResult {
    let rs = spec.realized()?;
    let mut signal = match (&a.control, a.t) {
        (Some(c), _) => parse_control(c, rs.channels())?,
        (None, Some(t)) => ControlSignal::zero(t, rs.channels())?,
        (None, None) => return Err(Error::InvalidInput("give --control, --T or both".into())),
    };
    if let Some(t) = a.t {
        let have = signal.duration();
        if t > have + 1e-12 {
            signal = signal.concat(&ControlSignal::zero(t - have, rs.channels())?);
        } else if t < have {
            signal = signal.split_at(t).0;
        }
    }
    let g0 = parse_element(&a.from, &rs)?;
    let traj = rs.solve(&g0, &signal, &SolveOptions { dt: tol.dt, stride: a.stride })?;
    if let Some(out) = &a.out {
        match out.extension().and_then(|e| e.to_str()) {
            Some("csv") => write_to(out, |w| traj.write_csv(w))?,
            Some("jsonl") => write_to(out, |w| traj.write_jsonl(w))?,
            _ => return Err(Error::InvalidInput("--out must end in .csv or .jsonl".into())),
        }
    }
    let worst = traj.states.iter().map(|g| rs.invariant_residual(g)).fold(0.0, f64::max);
    Ok((
        json!({
            "name": spec.name(),
            "T": signal.duration(),
            "samples": traj.times.len(),
            "columns": traj.column_names(),
            "final_time": traj.times.last(),
            "final_state": element_json(traj.last()),
            "max_invariant_residual": worst,
        }),
        0,
    ))
}

pub fn cmd_reach(spec: &LoadedSpec, tol: &Tolerances, a: &ReachArgs) -> CmdResult {
    let rs = spec.realized()?;
    let cloud = reach::sample_reachable(&rs, a.tau, a.n, a.seed, a.pieces, tol.dt)?;
    if let Some(out) = &a.out {
        write_to(out, |w| cloud.write_jsonl(w))?;
    }
    let report = reach::local_accessibility_test(&cloud)?;
    Ok((
        json!({
            "name": spec.name(),
            "points": cloud.points.len(),
            "charted": cloud.log_chart.len(),
            "dropped": cloud.dropped,
            "affine_dimension": report.result.dimension(),
            "accessibility": report,
            "note": "interior is certified empirically by hull containment in the log chart; this is evidence, not proof",
        }),
        0,
    ))
}

pub fn cmd_connect(spec: &LoadedSpec, tol: &Tolerances, a: &ConnectArgs) -> CmdResult {
    let rs = spec.realized()?;
    let from = parse_element(&a.from, &rs)?;
    let to = parse_element(&a.to, &rs)?;
    let opts = ConnectOptions {
        budget: a.budget,
        seed: a.seed,
        pieces: a.pieces,
        tau_range: (0.1, a.tau_max),
        verify_dt: tol.dt,
        ..ConnectOptions::default()
    };
    let c = reach::connect(&rs, &from, &to, &opts)?;
    Ok((
        json!({
            "name": spec.name(),
            "found": true,
            "residual": c.residual,
            "trajectories": c.trajectories,
            "T": c.signal.duration(),
            "signal": c.signal,
        }),
        0,
    ))
}
