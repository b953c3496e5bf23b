mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use critval_core::construction::ConstructionError;
use critval_core::distance::DistanceError;
use critval_core::hull::HullError;
use critval_core::ifs::{IfsError, DEFAULT_NODE_CAP};
use critval_core::precision::DEFAULT_BITS;

#[derive(Parser, Debug)]
#[command(name = "critval", version, about = "Certified critical values of distance functions to self-similar sets")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in bits.
    #[arg(long, global = true)]
    bits: Option<u32>,
    /// Node budget for cylinder enumeration and search.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Seed for sampled commands (gamma, verify-lemmas).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// On-disk run configuration. All keys optional, unknown keys rejected.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    ifs: Option<String>,
    precision_bits: Option<u32>,
    node_cap: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// Resolved settings shared by every subcommand. Serialized into artifacts
/// without the output path so that reruns elsewhere stay byte-identical.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub node_cap: u64,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub ifs_default: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Point cloud of an attractor at resolution eps.
    Attractor(commands::AttractorArgs),
    /// Certified distance from a point to an attractor, with its criticality.
    Distance(commands::DistanceArgs),
    /// Critical values of the distance function along a segment.
    CriticalScan(commands::ScanArgs),
    /// Hull vertex counts and edge directions across depths.
    HullCensus(commands::CensusArgs),
    /// Match hull edge directions to multiples of the rotation angle.
    EdgeDirections(commands::EdgeArgs),
    /// Sampled polytope constant.
    Gamma(commands::GammaArgs),
    /// Whether a disk cuts the hull of a cylinder well.
    CutsWell(commands::CutsWellArgs),
    /// Batch checks of the square-root bounds, ball separation and closest-ball lemmas.
    VerifyLemmas(commands::LemmaArgs),
    /// Search k, l with k·kappa mod 2π = 7q^{k+1} and kappa in an arc.
    KappaSearch(commands::KappaArgs),
    /// Run or resume the nested-interval refinement.
    Refine(commands::RefineArgs),
    /// M-values and separations of the critical family at step n.
    CriticalFamily(commands::FamilyArgs),
    /// Touching-ball certificate along a branch prefix.
    Certificate(commands::CertificateArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Budget(String),
    Certification(String),
    Io(std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Certification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Budget(s) => write!(f, "budget exceeded: {s}"),
            CliError::Certification(s) => write!(f, "certification failed: {s}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<IfsError> for CliError {
    fn from(e: IfsError) -> Self {
        match e {
            IfsError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DistanceError> for CliError {
    fn from(e: DistanceError) -> Self {
        match e {
            DistanceError::Ifs(e) => e.into(),
            DistanceError::OnAttractor => CliError::Config(e.to_string()),
        }
    }
}

impl From<HullError> for CliError {
    fn from(e: HullError) -> Self {
        match e {
            HullError::Ifs(e) => e.into(),
            _ => CliError::Certification(e.to_string()),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Ifs(e) => e.into(),
            ConstructionError::SearchExhausted(_) => CliError::Budget(e.to_string()),
            ConstructionError::CertificationFailed { .. } | ConstructionError::HypothesisViolation(_) => {
                CliError::Certification(e.to_string())
            }
            ConstructionError::DomainViolation | ConstructionError::Invalid(_) => CliError::Config(e.to_string()),
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RunConfigFile>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfigFile::default(),
    };
    let bits = common.bits.or(file.precision_bits).unwrap_or(DEFAULT_BITS);
    if !(32..=1 << 16).contains(&bits) {
        return Err(CliError::Config(format!("precision {bits} bits out of range")));
    }
    let out = common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out"));
    let out = if out.is_absolute() { out } else { std::env::current_dir()?.join(out) };
    Ok(RunConfig {
        precision_bits: bits,
        node_cap: common.cap.or(file.node_cap).unwrap_or(DEFAULT_NODE_CAP),
        seed: common.seed.or(file.seed).unwrap_or(0),
        out,
        ifs_default: file.ifs,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let rc = resolve(&cli.common)?;
    match cli.cmd {
        Cmd::Attractor(a) => commands::attractor(&rc, a),
        Cmd::Distance(a) => commands::distance(&rc, a),
        Cmd::CriticalScan(a) => commands::critical_scan(&rc, a),
        Cmd::HullCensus(a) => commands::hull_census(&rc, a),
        Cmd::EdgeDirections(a) => commands::edge_directions(&rc, a),
        Cmd::Gamma(a) => commands::gamma(&rc, a),
        Cmd::CutsWell(a) => commands::cuts_well(&rc, a),
        Cmd::VerifyLemmas(a) => commands::verify_lemmas(&rc, a),
        Cmd::KappaSearch(a) => commands::kappa_search(&rc, a),
        Cmd::Refine(a) => commands::refine(&rc, a),
        Cmd::CriticalFamily(a) => commands::critical_family(&rc, a),
        Cmd::Certificate(a) => commands::certificate(&rc, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
