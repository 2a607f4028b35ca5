//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the exit code with everything destined for
//! stdout and stderr, so the binary only prints.
//!
//! Exit codes: 0 affirmative, 1 negative verdict, 2 inconclusive, 3 input
//! error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::basis::{dissect, emit_protocol, Decision, OVERLAP_TOL};
use crate::certify::{
    appendix_E, eta_r, precondition_check, scan_chi, search_certificate, verify_certificate, Certificate,
    PointMethod, PointStatus, SearchConfig, SearchOutcome, SeesawConfig, PRODUCT_OVERLAP_MARGIN,
};
use crate::deviation::{d_ce, d_finite, d_mf, outcome_distribution, DeviationKind, OutcomeDistribution, WeightedStateFamily, FINITE_TOL};
use crate::error::Error;
use crate::fixtures::triple_family;
use crate::io::{matrix_to_json, read_json, to_json_string, BasisFile, CertFile, MeasurementFile, ProtocolFile, StatesFile};
use crate::protocol::simulate;
use crate::splitting::{equivalence_check, node_deviation, split_protocol, SplitConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

const CERT_TOL: f64 = 1e-8;
const EQUIVALENCE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "locclab", version, about = "Asymptotic LOCC discrimination toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every randomised search.
    #[arg(long, env = "LOCCLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Overrides the command's main tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print the machine-readable report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Where to write the command's artifact.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deviation of a measurement or protocol on a state family.
    Deviation {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long, default_value = "mf")]
        measure: DeviationKind,
        #[command(flatten)]
        common: Common,
    },
    /// Outcome table of a protocol or POVM.
    Simulate {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Split a protocol at a target deviation.
    Split {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "mf")]
        measure: DeviationKind,
        #[command(flatten)]
        common: Common,
    },
    /// Check a product-operator certificate.
    VerifyCert {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        chi: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Search numerically for a certificate.
    SearchCert {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        chi: f64,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Look for certificates on a uniform chi grid.
    ScanChi {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check that the common kernel holds no product vector.
    Precheck {
        #[arg(long)]
        states: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form certificate for the three-state two-qubit family.
    AppendixE {
        #[arg(long)]
        chi: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Decide finite LOCC discrimination of a complete product basis.
    Dissect {
        #[arg(long)]
        basis: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Serialize)]
struct Report {
    command: Vec<String>,
    inputs_digest: String,
    verdict: String,
    results: Value,
    tolerances: Map<String, Value>,
    seed: u64,
}

/// What a command produced before rendering.
struct Done {
    code: i32,
    verdict: String,
    results: Value,
    tolerances: Vec<(&'static str, f64)>,
    inputs: Vec<PathBuf>,
    /// File content for `--out`, when the command has an artifact.
    artifact: Option<String>,
    /// Print the artifact instead of the text report when `--out` is absent.
    artifact_on_stdout: bool,
    warnings: Vec<String>,
}

impl Done {
    fn new(code: i32, verdict: impl Into<String>, results: Value) -> Self {
        Self {
            code,
            verdict: verdict.into(),
            results,
            tolerances: Vec::new(),
            inputs: Vec::new(),
            artifact: None,
            artifact_on_stdout: false,
            warnings: Vec::new(),
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) => EXIT_NEGATIVE,
            Error::BracketFailure { .. } | Error::BisectionStalled { .. } => EXIT_INCONCLUSIVE,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<Done, Failure>;

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text },
            };
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let common = common(&cli.command).clone();
    let result = match &cli.command {
        Command::Deviation { states, protocol, measure, .. } => cmd_deviation(states, protocol, *measure, &common),
        Command::Simulate { states, protocol, .. } => cmd_simulate(states, protocol),
        Command::Split { states, protocol, delta, measure, .. } => cmd_split(states, protocol, *delta, *measure, &common),
        Command::VerifyCert { states, cert, chi, .. } => cmd_verify_cert(states, cert, *chi, &common),
        Command::SearchCert { states, chi, restarts, .. } => cmd_search(states, *chi, *restarts, &common),
        Command::ScanChi { states, grid, restarts, .. } => cmd_scan(states, *grid, *restarts, &common),
        Command::Precheck { states, .. } => cmd_precheck(states, &common),
        Command::AppendixE { chi, .. } => cmd_appendix(*chi, &common),
        Command::Dissect { basis, .. } => cmd_dissect(basis, &common),
    };
    match result {
        Ok(done) => render(done, echo, &common),
        Err(f) => Outcome { code: f.code, stdout: String::new(), stderr: format!("error: {}\n", f.message) },
    }
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Deviation { common, .. }
        | Command::Simulate { common, .. }
        | Command::Split { common, .. }
        | Command::VerifyCert { common, .. }
        | Command::SearchCert { common, .. }
        | Command::ScanChi { common, .. }
        | Command::Precheck { common, .. }
        | Command::AppendixE { common, .. }
        | Command::Dissect { common, .. } => common,
    }
}

fn digest(paths: &[PathBuf]) -> std::result::Result<String, Failure> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| Failure::from(Error::from(e)))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn render(done: Done, echo: Vec<String>, common: &Common) -> Outcome {
    let inputs_digest = match digest(&done.inputs) {
        Ok(d) => d,
        Err(f) => return Outcome { code: f.code, stdout: String::new(), stderr: format!("error: {}\n", f.message) },
    };
    let report = Report {
        command: echo,
        inputs_digest,
        verdict: done.verdict.clone(),
        results: done.results,
        tolerances: done.tolerances.iter().map(|(k, v)| (k.to_string(), json!(v))).collect(),
        seed: common.seed,
    };
    let stderr: String = done.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    if let (Some(path), Some(artifact)) = (&common.out, &done.artifact) {
        if let Err(e) = fs::write(path, artifact) {
            return Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {e}\n") };
        }
    } else if let Some(path) = &common.out {
        if let Err(e) = fs::write(path, to_json_string(&report)) {
            return Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {e}\n") };
        }
    }
    let stdout = if common.json {
        to_json_string(&report)
    } else if let (true, None, Some(artifact)) = (done.artifact_on_stdout, &common.out, &done.artifact) {
        artifact.clone()
    } else {
        let mut text = format!("{}: {}\n", report.command.first().map(String::as_str).unwrap_or(""), report.verdict);
        if let Value::Object(map) = &report.results {
            for (k, v) in map {
                text.push_str(&format!("  {k}: {v}\n"));
            }
        }
        let tols: Vec<String> = report.tolerances.iter().map(|(k, v)| format!("{k}={v}")).collect();
        text.push_str(&format!("  tolerances: {}\n  seed: {}\n", tols.join(" "), report.seed));
        text
    };
    Outcome { code: done.code, stdout, stderr }
}

fn load_states(path: &Path) -> std::result::Result<(WeightedStateFamily, Vec<String>), Failure> {
    Ok(read_json::<StatesFile>(path)?.to_family()?)
}

fn table_json(p: &OutcomeDistribution) -> Value {
    json!(p.table())
}

fn certificate_json(cert: &Certificate) -> Value {
    json!({
        "passed": cert.passed,
        "chi": cert.chi,
        "traces": cert.traces,
        "residuals": {
            "normalization": cert.residuals.normalization,
            "max_trace": cert.residuals.max_trace,
            "orthogonality": cert.residuals.orthogonality,
            "psd_margin": cert.residuals.psd_margin,
        },
        "factors": cert.e.factors().iter().map(matrix_to_json).collect::<Vec<_>>(),
        "operator": matrix_to_json(&cert.e.expand()),
    })
}

fn cmd_deviation(states: &Path, protocol: &Path, kind: DeviationKind, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let povm = read_json::<MeasurementFile>(protocol)?.to_povm()?;
    let p = outcome_distribution(&povm, &family)?;
    let tol = common.tol.unwrap_or(FINITE_TOL);
    let d = match kind {
        DeviationKind::Finite => d_finite(&p, tol),
        other => other.evaluate(&p),
    };
    let mut done = Done::new(EXIT_OK, "OK", json!({ "measure": kind.as_str(), "deviation": d, "table": table_json(&p) }));
    done.tolerances = vec![("finite", tol)];
    done.inputs = vec![states.into(), protocol.into()];
    done.warnings = warnings;
    Ok(done)
}

fn cmd_simulate(states: &Path, protocol: &Path) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let p = match read_json::<MeasurementFile>(protocol)? {
        MeasurementFile::Protocol(file) => simulate(&file.to_tree()?, &family)?,
        MeasurementFile::Povm(file) => outcome_distribution(&file.to_povm()?, &family)?,
    };
    let results = json!({
        "outcomes": p.outcomes(),
        "table": table_json(&p),
        "d_mf": d_mf(&p),
        "d_ce": d_ce(&p),
        "d_finite": d_finite(&p, FINITE_TOL),
    });
    let mut done = Done::new(EXIT_OK, "OK", results);
    done.tolerances = vec![("finite", FINITE_TOL)];
    done.inputs = vec![states.into(), protocol.into()];
    done.warnings = warnings;
    Ok(done)
}

fn cmd_split(states: &Path, protocol: &Path, delta: f64, kind: DeviationKind, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let tree = read_json::<ProtocolFile>(protocol)?.to_tree()?;
    let mut config = SplitConfig::new(delta, kind);
    if let Some(tol) = common.tol {
        config.level_tol = tol;
    }
    let result = split_protocol(&tree, &config, &family)?;
    let residual = equivalence_check(&tree, &result, &family)?;
    let boundary = result
        .s_delta
        .iter()
        .map(|&n| node_deviation(&result.stage_one, n, kind, &family))
        .collect::<crate::Result<Vec<_>>>()?;
    let boundary_ok = boundary.iter().all(|d| (d - delta).abs() <= config.level_tol);
    let ok = boundary_ok && residual <= EQUIVALENCE_TOL;
    let artifact = json!({
        "modified": ProtocolFile::from_tree(&result.modified),
        "stage_one": ProtocolFile::from_tree(&result.stage_one),
        "s_delta": result.s_delta,
        "forget_map": result.forget_map,
        "equivalence_residual": residual,
    });
    let results = json!({
        "measure": kind.as_str(),
        "delta": delta,
        "iterations": result.iterations,
        "pseudo_weak": result.pseudo_weak.iter().map(|(n, b)| json!({"node": n, "b": b})).collect::<Vec<_>>(),
        "modified_leaves": result.modified.leaves().len(),
        "stage_one_leaves": result.stage_one.leaves().len(),
        "s_delta_deviations": boundary,
        "forget_map": result.forget_map,
        "equivalence_residual": residual,
    });
    let mut done = Done::new(if ok { EXIT_OK } else { EXIT_NEGATIVE }, if ok { "OK" } else { "FAIL" }, results);
    done.tolerances = vec![("level", config.level_tol), ("equivalence", EQUIVALENCE_TOL)];
    done.inputs = vec![states.into(), protocol.into()];
    done.artifact = Some(to_json_string(&artifact));
    done.warnings = warnings;
    Ok(done)
}

fn cmd_verify_cert(states: &Path, cert: &Path, chi: f64, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let e = read_json::<CertFile>(cert)?.to_operator()?;
    let tol = common.tol.unwrap_or(CERT_TOL);
    let c = verify_certificate(&e, &family, chi, tol)?;
    let mut done = Done::new(
        if c.passed { EXIT_OK } else { EXIT_NEGATIVE },
        if c.passed { "PASS" } else { "FAIL" },
        certificate_json(&c),
    );
    done.tolerances = vec![("certificate", tol)];
    done.inputs = vec![states.into(), cert.into()];
    done.warnings = warnings;
    Ok(done)
}

fn search_config(restarts: usize, common: &Common) -> SearchConfig {
    SearchConfig { restarts, seed: common.seed, tol: common.tol.unwrap_or(CERT_TOL), ..SearchConfig::default() }
}

fn cmd_search(states: &Path, chi: f64, restarts: usize, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let config = search_config(restarts, common);
    let outcome = search_certificate(&family, chi, &config)?;
    let (code, verdict, restart) = match &outcome {
        SearchOutcome::Found { restart, .. } => (EXIT_OK, "FOUND", Some(*restart)),
        SearchOutcome::Inconclusive { .. } => (EXIT_INCONCLUSIVE, "INCONCLUSIVE", None),
    };
    let results = json!({ "restart": restart, "restarts": restarts, "certificate": certificate_json(outcome.certificate()) });
    let mut done = Done::new(code, verdict, results);
    done.tolerances = vec![("certificate", config.tol), ("convergence", config.convergence)];
    done.inputs = vec![states.into()];
    done.artifact = Some(to_json_string(&CertFile::from_operator(&outcome.certificate().e)));
    done.warnings = warnings;
    Ok(done)
}

fn cmd_scan(states: &Path, grid: usize, restarts: usize, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let config = search_config(restarts, common);
    let seesaw = SeesawConfig { seed: common.seed, ..SeesawConfig::default() };
    let report = scan_chi(&family, grid, &config, &seesaw)?;
    let points: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            json!({
                "chi": p.chi,
                "status": match p.status { PointStatus::Pass => "pass", PointStatus::Inconclusive => "inconclusive" },
                "method": match p.method { PointMethod::ClosedForm => "closed_form", PointMethod::Search => "search" },
                "max_residual": p.certificate.residuals.normalization
                    .max(p.certificate.residuals.max_trace)
                    .max(p.certificate.residuals.orthogonality),
                "psd_margin": p.certificate.residuals.psd_margin,
            })
        })
        .collect();
    let satisfied = report.satisfied();
    let verdict = if satisfied {
        "condition satisfied on grid".to_string()
    } else {
        format!("inconclusive at chi = {:?}", report.inconclusive_at())
    };
    let results = json!({
        "grid": grid,
        "precondition_max_overlap": report.precondition.max_overlap,
        "points": points,
        "inconclusive_at": report.inconclusive_at(),
    });
    let mut done = Done::new(if satisfied { EXIT_OK } else { EXIT_INCONCLUSIVE }, verdict, results);
    done.tolerances = vec![("certificate", config.tol), ("product_overlap_margin", PRODUCT_OVERLAP_MARGIN)];
    done.inputs = vec![states.into()];
    done.warnings = warnings;
    Ok(done)
}

fn cmd_precheck(states: &Path, common: &Common) -> CmdResult {
    let (family, warnings) = load_states(states)?;
    let seesaw = SeesawConfig { seed: common.seed, ..SeesawConfig::default() };
    let pre = precondition_check(&family, &seesaw)?;
    let eta = eta_r(&family, &seesaw)?.eta();
    let results = json!({
        "passed": pre.passed,
        "kernel_dim": pre.kernel_dim,
        "max_overlap": pre.max_overlap,
        "eta": eta,
        "max_certificate_eigenvalue": if eta > 0.0 { json!(1.0 / eta) } else { Value::Null },
    });
    let mut done = Done::new(
        if pre.passed { EXIT_OK } else { EXIT_NEGATIVE },
        if pre.passed { "PASS" } else { "FAIL" },
        results,
    );
    done.tolerances = vec![("product_overlap_margin", PRODUCT_OVERLAP_MARGIN)];
    done.inputs = vec![states.into()];
    done.warnings = warnings;
    Ok(done)
}

fn cmd_appendix(chi: f64, common: &Common) -> CmdResult {
    let e = appendix_E(chi)?;
    let tol = common.tol.unwrap_or(CERT_TOL);
    let check = verify_certificate(&e, &triple_family(), chi, tol)?;
    let file = CertFile::from_operator(&e);
    let results = json!({
        "chi": chi,
        "branch": if chi < 0.5 { "B (x) C" } else { "A (x) |1><1|" },
        "factors": file.factors,
        "self_check": certificate_json(&check),
    });
    let mut done = Done::new(EXIT_OK, "OK", results);
    done.tolerances = vec![("certificate", tol)];
    done.artifact = Some(to_json_string(&file));
    done.artifact_on_stdout = true;
    Ok(done)
}

fn cmd_dissect(basis_path: &Path, common: &Common) -> CmdResult {
    let basis = read_json::<BasisFile>(basis_path)?.to_basis()?;
    let tol = common.tol.unwrap_or(OVERLAP_TOL);
    let result = dissect(&basis, tol)?;
    let mut results = json!({
        "decision": result.decision.as_str(),
        "states": basis.len(),
    });
    let mut done = match result.decision {
        Decision::FiniteDiscriminable => {
            let tree = emit_protocol(&result)?;
            let p = simulate(&tree, &basis.family())?;
            results["protocol_depth"] = json!(tree.max_depth());
            results["leaf_labels"] = json!(result.leaf_labels);
            results["d_mf"] = json!(d_mf(&p));
            let mut done = Done::new(EXIT_OK, result.decision.as_str(), results);
            done.artifact = Some(to_json_string(&ProtocolFile::from_tree(&tree)));
            done
        }
        Decision::NotDiscriminable => {
            results["witness"] = json!(result.witness);
            results["note"] = json!(
                "no local measurement splits the witness without disturbing it; for a complete product basis this \
                 also excludes perfect discrimination by asymptotic LOCC"
            );
            Done::new(EXIT_NEGATIVE, result.decision.as_str(), results)
        }
    };
    done.tolerances = vec![("overlap", tol)];
    done.inputs = vec![basis_path.into()];
    Ok(done)
}
