//! Command-line front end: reads JSON models, runs the solvers and writes
//! CSV or JSON reports.
//!
//! Exit codes: 0 success or feasible, 1 usage or parse error, 2 numerical
//! failure, 3 infeasible result.

pub mod example1;
pub mod model;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;
use twjscc_core::converse::{theorem3_region, RateRatio, RegionOptions, DEFAULT_TOL_HYP};
use twjscc_core::hybrid::{evaluate_scheme, search_hybrid, AchievabilityReport, SchemeJson, SearchOptions};
use twjscc_core::prob::{DistortionMatrix, User};
use twjscc_core::rd::{conditional_dmax, conditional_rd_curve, distortion_grid, rd_curve, wz_rd_curve, RDCurve, WzOptions};
use twjscc_core::simulate::monte_carlo;
use twjscc_core::twc::{inner_region, outer_region, Coincidence, DEFAULT_RESTARTS};

pub use model::{Model, ModelFile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },

    #[error(transparent)]
    Core(#[from] twjscc_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use twjscc_core::Error as E;
        match self {
            CliError::Core(E::NotConverged { .. } | E::GuardExceeded { .. } | E::EmptyCurve | E::Infeasible(_)) => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        }
    }

    /// Machine-readable description for stderr.
    pub fn diagnostic(&self) -> serde_json::Value {
        use twjscc_core::Error as E;
        let kind = match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Core(E::NotConverged { .. }) => "not_converged",
            CliError::Core(E::GuardExceeded { .. }) => "guard_exceeded",
            CliError::Core(E::Infeasible(_)) => "infeasible",
            CliError::Core(_) => "model",
        };
        let mut v = serde_json::json!({ "error": kind, "message": self.to_string() });
        if let CliError::Core(E::NotConverged { iterations, residual, last }) = self {
            v["iterations"] = (*iterations).into();
            v["residual"] = (*residual).into();
            v["last"] = serde_json::to_value(last).unwrap_or_default();
        }
        v
    }
}

#[derive(Debug, Parser)]
#[command(name = "twjscc", version, about = "Lossy transmission of correlated sources over two-way channels")]
pub struct Cli {
    /// Worker threads; defaults to every available core.
    #[arg(long, global = true, env = "TWJSCC_THREADS")]
    pub threads: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Standard rate-distortion curve of one source.
    Rd(CurveArgs),
    /// Conditional rate-distortion curve (side information at both ends).
    CondRd(CurveArgs),
    /// Wyner-Ziv rate-distortion curve (side information at the decoder).
    WzRd(WzArgs),
    /// Shannon inner and/or outer rate region of the channel.
    Capacity(CapacityArgs),
    /// Evaluate a scheme or search for one meeting a distortion target.
    Hybrid(HybridArgs),
    /// Inner and outer distortion regions with the exactness check.
    Region(RegionArgs),
    /// Monte Carlo run of a scheme.
    Simulate(SimulateArgs),
    /// Reproducibility report for the canned binary example.
    Example1(Example1Args),
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Which source: 1 or 2.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub user: u8,
    /// Number of distortion grid points.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct WzArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = WzOptions::default().restarts)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bound {
    Inner,
    Outer,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = Bound::Both)]
    pub bound: Bound,
    /// Points per edge of the input grids.
    #[arg(long, default_value_t = 17)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for declaring the bounds coincident.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct HybridArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Scheme JSON file to evaluate.
    #[arg(long, conflicts_with_all = ["scheme_name", "target"])]
    pub scheme: Option<PathBuf>,
    /// Name of a scheme stored in the model file.
    #[arg(long, conflicts_with = "target")]
    pub scheme_name: Option<String>,
    /// Distortion target "D1,D2" for the search.
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<f64>>,
    #[arg(long, default_value_t = SearchOptions::default().budget)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Source symbols per channel use, as K/N.
    #[arg(long, default_value = "1/1")]
    pub rate: String,
    /// Distortion grid points per curve.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
    /// Hypothesis tolerance in bits.
    #[arg(long, default_value_t = DEFAULT_TOL_HYP)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "scheme_name")]
    pub scheme: Option<PathBuf>,
    #[arg(long)]
    pub scheme_name: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the (s1, s2, y1, y2) tally as CSV here.
    #[arg(long)]
    pub tally: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Example1Args {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples; 0 skips the simulation.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
}

/// Primary output of a command and its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: u8,
    /// Human-readable notes for stderr.
    pub notes: Vec<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            code: EXIT_OK,
            notes: Vec::new(),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn user(u: u8) -> User {
    if u == 1 {
        User::One
    } else {
        User::Two
    }
}

fn distortion(m: &Model, u: User) -> &DistortionMatrix {
    match u {
        User::One => &m.d1,
        User::Two => &m.d2,
    }
}

fn check_grid(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    Ok(())
}

fn cmd_curve(args: &CurveArgs, kind: CurveKind, wz: &WzOptions) -> Result<Output, CliError> {
    check_grid(args.grid)?;
    let m = Model::load(&args.model)?;
    let u = user(args.user);
    let d = distortion(&m, u);
    let p = m.source.marginal(u);
    let dmin = d.min_distortion(p.as_slice());
    let curve: RDCurve = match kind {
        CurveKind::Plain => rd_curve(&p, d, &distortion_grid(dmin, d.max_useful_distortion(p.as_slice()), args.grid))?,
        CurveKind::Conditional => {
            let hi = conditional_dmax(&m.source, u, d)?;
            conditional_rd_curve(&m.source, u, d, &distortion_grid(dmin, hi, args.grid))?
        }
        CurveKind::WynerZiv => {
            let hi = conditional_dmax(&m.source, u, d)?;
            wz_rd_curve(&m.source, u, d, &distortion_grid(dmin, hi, args.grid), wz)?
        }
    };
    Ok(Output::ok(curve.to_csv()))
}

#[derive(Debug, Clone, Copy)]
enum CurveKind {
    Plain,
    Conditional,
    WynerZiv,
}

fn prefixed_csv(prefix: &str, csv: &str) -> String {
    csv.lines()
        .skip(1)
        .map(|l| format!("{prefix}_{l}\n"))
        .collect()
}

fn cmd_capacity(args: &CapacityArgs) -> Result<Output, CliError> {
    check_grid(args.grid)?;
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let m = Model::load(&args.model)?;
    let mut text = String::from("kind,x,y\n");
    let mut notes = Vec::new();
    let inner = matches!(args.bound, Bound::Inner | Bound::Both)
        .then(|| inner_region(&m.channel, args.grid))
        .transpose()?;
    let outer = matches!(args.bound, Bound::Outer | Bound::Both)
        .then(|| outer_region(&m.channel, args.grid, DEFAULT_RESTARTS, args.seed))
        .transpose()?;
    if let Some(r) = &inner {
        text.push_str(&prefixed_csv("inner", &r.to_csv()));
    }
    if let Some(r) = &outer {
        text.push_str(&prefixed_csv("outer", &r.to_csv()));
    }
    if let (Some(i), Some(o)) = (&inner, &outer) {
        let c = Coincidence::between(i, o, args.tol);
        notes.push(format!("coincidence gap {:.6e} (coincide at tol {}: {})", c.gap, args.tol, c.coincide));
    }
    Ok(Output {
        text,
        code: EXIT_OK,
        notes,
    })
}

#[derive(Debug, Serialize)]
struct Candidate {
    scheme: SchemeJson,
    report: AchievabilityReport,
    stage: usize,
}

#[derive(Debug, Serialize)]
struct SearchReport {
    target: [f64; 2],
    found: bool,
    best: Option<Candidate>,
    closest: Option<Candidate>,
    feasible_points: Vec<[f64; 2]>,
    evaluations: usize,
    budget_exhausted: bool,
}

fn cmd_hybrid(args: &HybridArgs) -> Result<Output, CliError> {
    let m = Model::load(&args.model)?;
    let scheme = match (&args.scheme, &args.scheme_name) {
        (Some(path), _) => Some(m.check_scheme(&model::read_json(path)?)?),
        (None, Some(name)) => Some(m.scheme(name)?),
        (None, None) => None,
    };
    if let Some(sch) = scheme {
        let report = evaluate_scheme(&m.source, &m.channel, &sch, &m.d1, &m.d2)?;
        let code = if report.feasible() { EXIT_OK } else { EXIT_INFEASIBLE };
        return Ok(Output {
            text: json(&report),
            code,
            notes: Vec::new(),
        });
    }
    let target = match args.target.as_deref() {
        Some([a, b]) => [*a, *b],
        Some(v) => return Err(CliError::Usage(format!("--target needs two values D1,D2, got {}", v.len()))),
        None => return Err(CliError::Usage("give --scheme, --scheme-name or --target D1,D2".into())),
    };
    let opts = SearchOptions {
        budget: args.budget,
        seed: args.seed,
        ..SearchOptions::default()
    };
    let res = search_hybrid(&m.source, &m.channel, &m.d1, &m.d2, target, &opts)?;
    let cand = |f: &twjscc_core::hybrid::Found| Candidate {
        scheme: f.scheme.to_json(),
        report: f.report,
        stage: f.stage,
    };
    let found = res.best.is_some();
    let report = SearchReport {
        target,
        found,
        best: res.best.as_ref().map(cand),
        closest: res.closest.as_ref().map(cand),
        feasible_points: res.feasible_points,
        evaluations: res.evaluations,
        budget_exhausted: res.budget_exhausted,
    };
    Ok(Output {
        text: json(&report),
        code: if found { EXIT_OK } else { EXIT_INFEASIBLE },
        notes: Vec::new(),
    })
}

fn cmd_region(args: &RegionArgs) -> Result<Output, CliError> {
    check_grid(args.grid)?;
    let rate: RateRatio = args.rate.parse()?;
    let m = Model::load(&args.model)?;
    let opts = RegionOptions {
        curve_points: args.grid.max(2),
        seed: args.seed,
        ..RegionOptions::default()
    };
    let rep = theorem3_region(&m.source, &m.channel, &m.d1, &m.d2, rate, args.tol, &opts)?;
    Ok(Output::ok(json(&rep)))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let m = Model::load(&args.model)?;
    let sch = match (&args.scheme, &args.scheme_name) {
        (Some(path), _) => m.check_scheme(&model::read_json(path)?)?,
        (None, Some(name)) => m.scheme(name)?,
        (None, None) => return Err(CliError::Usage("give --scheme or --scheme-name".into())),
    };
    let res = monte_carlo(&m.source, &m.channel, &sch, &m.d1, &m.d2, args.samples, args.seed)?;
    if let Some(path) = &args.tally {
        std::fs::write(path, res.tally.to_csv()).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(Output::ok(json(&res)))
}

fn cmd_example1(args: &Example1Args) -> Result<Output, CliError> {
    let rep = example1::report(args.seed, args.samples)?;
    let notes = rep
        .checks
        .iter()
        .map(|c| format!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name))
        .collect();
    Ok(Output {
        text: json(&rep),
        code: EXIT_OK,
        notes,
    })
}

/// Runs one parsed command on the current rayon pool.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Rd(a) => cmd_curve(a, CurveKind::Plain, &WzOptions::default()),
        Command::CondRd(a) => cmd_curve(a, CurveKind::Conditional, &WzOptions::default()),
        Command::WzRd(a) => {
            let wz = WzOptions {
                seed: a.seed,
                restarts: a.restarts,
                ..WzOptions::default()
            };
            cmd_curve(&a.curve, CurveKind::WynerZiv, &wz)
        }
        Command::Capacity(a) => cmd_capacity(a),
        Command::Hybrid(a) => cmd_hybrid(a),
        Command::Region(a) => cmd_region(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Example1(a) => cmd_example1(a),
    }
}

/// Runs `cli` on a pool capped at `--threads` and writes the primary output.
/// Returns the process exit code.
pub fn execute(cli: &Cli) -> u8 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("{}", CliError::Usage("--threads must be at least 1".into()).diagnostic());
            return EXIT_USAGE;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}", CliError::Usage(format!("cannot build thread pool: {e}")).diagnostic());
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(out) => {
            for n in &out.notes {
                eprintln!("{n}");
            }
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    source: e,
                }),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("{}", e.diagnostic());
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        let nc = twjscc_core::Error::NotConverged {
            iterations: 3,
            residual: 0.1,
            last: twjscc_core::rd::RDPoint {
                distortion: 0.1,
                rate: 0.5,
                slope: -1.0,
            },
        };
        let e = CliError::Core(nc);
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let d = e.diagnostic();
        assert_eq!(d["error"], "not_converged");
        assert_eq!(d["iterations"], 3);
        assert_eq!(CliError::Core(twjscc_core::Error::ShapeMismatch("s".into())).exit_code(), EXIT_USAGE);
    }

    #[test]
    fn parses_global_flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["twjscc", "example1", "--samples", "0", "--threads", "2", "--out", "x.json"]).unwrap();
        assert_eq!(cli.threads, Some(2));
        assert!(matches!(cli.command, Command::Example1(Example1Args { samples: 0, .. })));
        assert!(Cli::try_parse_from(["twjscc", "rd", "--model", "m.json", "--user", "3"]).is_err());
    }

    #[test]
    fn example_report_without_sampling() {
        let out = run(&Cli::try_parse_from(["twjscc", "example1", "--samples", "0"]).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert!(v["monte_carlo"].is_null());
        assert_eq!(v["sscc"]["violations"], 0);
        assert!(out.notes.iter().any(|n| n == "PASS uncoded_exact_distortions"));
    }
}
