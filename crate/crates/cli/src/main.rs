//! `etail`: evaluation, verification, limit scans and sampling for the
//! elliptic tail kernel and its relatives.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elliptic_tail::draws::DEFAULT_SEED;
use elliptic_tail::kernels::{Branch, LatticePoint};
use elliptic_tail::Complex64;
use serde::{Deserialize, Serialize};

use output::{Format, RunManifest, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl From<elliptic_tail::Error> for CliError {
    fn from(e: elliptic_tail::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "etail", version, about = "Elliptic tail kernel evaluation, verification, limit scans and sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Evaluate a kernel or the Fourier symbol.
    #[command(subcommand)]
    Eval(EvalKind),
    /// Run identity verification suites over seeded random draws.
    Verify(VerifyArgs),
    /// Convergence scans towards the limit kernels.
    #[command(subcommand)]
    Scan(ScanKind),
    /// Draw exact samples of the point process on a finite window.
    Sample(SampleArgs),
    /// Rerun the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output here and the run manifest beside it; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the run manifest when writing to stdout; stderr otherwise.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Relative tolerance of the evaluators.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PairArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta_plus: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta_minus: f64,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub gamma: Complex64,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub delta: Complex64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct QuadArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub alpha: Complex64,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub beta: Complex64,
}

/// Pairs of lattice points `x[i], y[i]`, written `+k` or `-k`.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PointArgs {
    #[arg(long, value_parser = parse::lattice_point, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<LatticePoint>,
    #[arg(long, value_parser = parse::lattice_point, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub y: Vec<LatticePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// The kernel itself.
    None,
    /// Conjugated by `ε`, translation invariant under `x ↦ qx`.
    Eps,
    /// Particle-hole transform on the positive half after conjugating by `ν`.
    Hat,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalKind {
    /// The elliptic tail kernel K^{γ,δ}.
    Elliptic {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        points: PointArgs,
        #[arg(long, value_enum, default_value_t = Gauge::None)]
        gauge: Gauge,
        #[command(flatten)]
        common: Common,
    },
    /// The basic hypergeometric kernel K^{α,β,γ,δ}.
    Basic {
        #[command(flatten)]
        quad: QuadArgs,
        #[command(flatten)]
        points: PointArgs,
        #[command(flatten)]
        common: Common,
    },
    /// The matrix trigonometric kernel on two lines.
    Trig {
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        c: Complex64,
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        d: Complex64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        v: Vec<f64>,
        /// Line of the `u` points, 1 or 2.
        #[arg(long, default_value_t = 1)]
        i: u8,
        /// Line of the `v` points, 1 or 2.
        #[arg(long, default_value_t = 1)]
        j: u8,
        #[command(flatten)]
        common: Common,
    },
    /// The discrete sine kernel.
    Sine {
        #[arg(long)]
        phi: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        m: Vec<i64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        n: Vec<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// The 2x2 Fourier symbol in closed form, with its projection residuals.
    Fourier {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        eta: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteArg {
    Theta,
    Hyper,
    Weierstrass,
    Sums,
    Fourier,
    Projection,
    All,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    /// Replace every per-identity residual threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    /// Sign-corrected basic kernel at `q^M x, q^M y` against the elliptic tail kernel.
    Tail {
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long, value_parser = parse::lattice_point, allow_hyphen_values = true)]
        x: LatticePoint,
        #[arg(long, value_parser = parse::lattice_point, allow_hyphen_values = true)]
        y: LatticePoint,
        #[arg(long, default_value_t = 40)]
        m_max: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Rescaled kernel against the matrix trigonometric kernel as `q → 1`.
    Trig {
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        c: Complex64,
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        d: Complex64,
        #[arg(long, allow_hyphen_values = true)]
        z_plus: f64,
        #[arg(long, allow_hyphen_values = true)]
        z_minus: f64,
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        #[arg(long, allow_hyphen_values = true)]
        v: f64,
        #[arg(long, default_value_t = 1)]
        i: u8,
        #[arg(long, default_value_t = 1)]
        j: u8,
        /// Values of `q`, in increasing order.
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,0.95,0.99")]
        sweep: Vec<f64>,
        /// Use the pair built from `ζ₋`; no limit is asserted.
        #[arg(long)]
        mirrored: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Gauged kernel against the discrete sine kernel as `q → 1`.
    Sine {
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, allow_hyphen_values = true)]
        zeta_plus: f64,
        #[arg(long, allow_hyphen_values = true)]
        zeta_minus: f64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, value_parser = parse::branch, allow_hyphen_values = true, default_value = "+")]
        branch: Branch,
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,0.95,0.99")]
        sweep: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Elliptic,
    Basic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Both,
    Plus,
    Minus,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Elliptic)]
    pub kernel: KernelArg,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub alpha: Option<Complex64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub beta: Option<Complex64>,
    /// Exponent range `lo..hi` of the window.
    #[arg(long, value_parser = parse::range, allow_hyphen_values = true, conflicts_with = "points", required_unless_present = "points")]
    pub range: Option<(i64, i64)>,
    /// Halves of the lattice the range covers.
    #[arg(long, value_enum, default_value_t = Half::Both)]
    pub half: Half,
    /// Explicit window points, `+k` or `-k`.
    #[arg(long, value_parser = parse::lattice_point, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Option<Vec<LatticePoint>>,
    #[arg(long, short = 'n', default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the replayed output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> String {
        let sub = match self {
            Command::Eval(k) => Some(match k {
                EvalKind::Elliptic { .. } => "elliptic",
                EvalKind::Basic { .. } => "basic",
                EvalKind::Trig { .. } => "trig",
                EvalKind::Sine { .. } => "sine",
                EvalKind::Fourier { .. } => "fourier",
            }),
            Command::Scan(k) => Some(match k {
                ScanKind::Tail { .. } => "tail",
                ScanKind::Trig { .. } => "trig",
                ScanKind::Sine { .. } => "sine",
            }),
            _ => None,
        };
        let top = match self {
            Command::Eval(_) => "eval",
            Command::Verify(_) => "verify",
            Command::Scan(_) => "scan",
            Command::Sample(_) => "sample",
            Command::Replay(_) => "replay",
        };
        sub.map_or(top.to_string(), |s| format!("{top} {s}"))
    }

    fn common_mut(&mut self) -> Option<&mut Common> {
        Some(match self {
            Command::Eval(
                EvalKind::Elliptic { common, .. }
                | EvalKind::Basic { common, .. }
                | EvalKind::Trig { common, .. }
                | EvalKind::Sine { common, .. }
                | EvalKind::Fourier { common, .. },
            ) => common,
            Command::Scan(ScanKind::Tail { common, .. } | ScanKind::Trig { common, .. } | ScanKind::Sine { common, .. }) => {
                common
            }
            Command::Verify(a) => &mut a.common,
            Command::Sample(a) => &mut a.common,
            Command::Replay(_) => return None,
        })
    }

    fn seed(&self) -> u64 {
        match self {
            Command::Verify(a) => a.seed,
            Command::Sample(a) => a.seed,
            _ => 0,
        }
    }
}

fn replay(args: &ReplayArgs) -> Result<Verdict, CliError> {
    let m = RunManifest::read(&args.manifest)?;
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!("warning: manifest written by version {}, replaying with {}", m.tool_version, env!("CARGO_PKG_VERSION"));
    }
    let mut cmd: Command = serde_json::from_value(m.params)
        .map_err(|e| CliError::Validation(format!("manifest parameters do not describe a command: {e}")))?;
    let Some(common) = cmd.common_mut() else {
        return Err(CliError::Validation("a manifest cannot record a replay".into()));
    };
    common.out = args.out.clone();
    common.manifest = None;
    execute(cmd)
}

fn execute(mut cmd: Command) -> Result<Verdict, CliError> {
    if let Command::Replay(args) = &cmd {
        return replay(args);
    }
    let manifest = RunManifest::new(
        cmd.name(),
        serde_json::to_value(&cmd).expect("commands serialize"),
        cmd.seed(),
    );
    let common = cmd.common_mut().expect("not a replay").clone();
    let report = commands::run(&cmd, &common)?;
    let (main, side) = report.render(common.format)?;
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    match &common.out {
        Some(path) => {
            output::write_file(path, &main)?;
            output::write_file(&output::sidecar(path), manifest_json.as_bytes())?;
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&main)
                .map_err(|source| CliError::Io { context: "writing stdout".into(), source })?;
            match &common.manifest {
                Some(path) => output::write_file(path, manifest_json.as_bytes())?,
                None => eprintln!("manifest: {}", serde_json::to_string(&manifest).expect("manifest serializes")),
            }
        }
    }
    if !side.is_empty() {
        eprint!("{}", String::from_utf8_lossy(&side));
    }
    Ok(report.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match execute(cli.command) {
        Ok(Verdict::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("etail: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
