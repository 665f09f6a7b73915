//! Flag parsing, config-file merging and validation into a [`RunConfig`].
//!
//! Precedence, highest first: command-line flag, config file, the
//! `PERCOLAB_SEED` environment variable (seed only), built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use percolab::analysis::{BoundKind, BoundParams, OzForm, DEFAULT_Z};
use percolab::estimators::{Strategy, DEFAULT_LEVEL};
use percolab::lattice::{BoxSpec, LatticeGraph};
use percolab::oracle::DEFAULT_ENUMERATION_CAP;
use percolab::EventKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "PERCOLAB_SEED";

const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: u64 = 1_000_000;
const DEFAULT_SWEEPS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "percolab",
    version,
    about = "Bond percolation connectivity laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact connectivity polynomials by enumerating every bond configuration.
    Exact(Flags),
    /// Monte Carlo two-point connectivity curve.
    Tau(Flags),
    /// Monte Carlo truncated (finite-cluster proxy) connectivity curve.
    TauTrunc(Flags),
    /// Bond-addition sweeps serving a whole p-grid at once.
    Sweep(Flags),
    /// Fit amplitude and correlation length with a fixed power correction.
    FitOz(Flags),
    /// Place a curve relative to closed-form bounds.
    CheckBounds(Flags),
    /// Successive ratios tau(n)/tau(n+1) against the decay prediction.
    Ratio(Flags),
    /// Paired test that the curve decreases in n.
    MonoCheck(Flags),
    /// Monotonicity test over a p-grid.
    MonoScan(Flags),
}

impl Command {
    fn split(self) -> (Kind, Flags) {
        match self {
            Command::Exact(f) => (Kind::Exact, f),
            Command::Tau(f) => (Kind::Tau, f),
            Command::TauTrunc(f) => (Kind::TauTrunc, f),
            Command::Sweep(f) => (Kind::Sweep, f),
            Command::FitOz(f) => (Kind::FitOz, f),
            Command::CheckBounds(f) => (Kind::CheckBounds, f),
            Command::Ratio(f) => (Kind::Ratio, f),
            Command::MonoCheck(f) => (Kind::MonoCheck, f),
            Command::MonoScan(f) => (Kind::MonoScan, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Exact,
    Tau,
    TauTrunc,
    Sweep,
    FitOz,
    CheckBounds,
    Ratio,
    MonoCheck,
    MonoScan,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Exact => "exact",
            Kind::Tau => "tau",
            Kind::TauTrunc => "tau-trunc",
            Kind::Sweep => "sweep",
            Kind::FitOz => "fit-oz",
            Kind::CheckBounds => "check-bounds",
            Kind::Ratio => "ratio",
            Kind::MonoCheck => "mono-check",
            Kind::MonoScan => "mono-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventArg {
    TwoPoint,
    Truncated,
}

impl From<EventArg> for EventKind {
    fn from(e: EventArg) -> Self {
        match e {
            EventArg::TwoPoint => EventKind::TwoPoint,
            EventArg::Truncated => EventKind::Truncated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundArg {
    Lemma2,
    Lemma4,
    Lemma6,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Lemma2 => BoundKind::Lemma2,
            BoundArg::Lemma4 => BoundKind::Lemma4,
            BoundArg::Lemma6 => BoundKind::Lemma6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormArg {
    Lemma1,
    Lemma3,
    Lemma5,
}

impl From<FormArg> for OzForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Lemma1 => OzForm::Lemma1,
            FormArg::Lemma3 => OzForm::Lemma3,
            FormArg::Lemma5 => OzForm::Lemma5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    ClusterProbe,
    UnionFind,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::ClusterProbe => Strategy::ClusterProbe,
            StrategyArg::UnionFind => Strategy::UnionFind,
        }
    }
}

/// Where analysis subcommands take their curve from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Exhaustive enumeration (small boxes only).
    Exact,
    /// Paired Monte Carlo estimate.
    Mc,
    /// The curve stored in an earlier report (`--input`).
    File,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with default values for any of the flags below
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Lattice dimension d (>= 1)
    #[arg(long)]
    pub d: Option<usize>,
    /// Largest target distance along axis 0, in lattice spacings
    #[arg(long, value_name = "SPACINGS")]
    pub n_max: Option<u32>,
    /// Padding around the origin-target segment on every side, in lattice spacings
    #[arg(long, value_name = "SPACINGS")]
    pub margin: Option<u32>,
    /// Lower box corner as comma-separated lattice coordinates; with --hi, replaces the box spec
    #[arg(
        long,
        value_name = "X0,X1,..",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub lo: Option<Vec<i64>>,
    /// Upper box corner as comma-separated lattice coordinates
    #[arg(
        long,
        value_name = "X0,X1,..",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub hi: Option<Vec<i64>>,
    /// Bond density p, a probability in [0, 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// Strictly increasing comma-separated bond densities in [0, 1]
    #[arg(long, value_name = "P0,P1,..", value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Target distances in lattice spacings: `1..8` (inclusive), `1..=8`, or `1,2,5`
    #[arg(long, value_name = "RANGE|LIST")]
    pub n: Option<String>,
    /// Connectivity event
    #[arg(long, value_enum)]
    pub event: Option<EventArg>,
    /// Monte Carlo configurations per curve (accepts scientific notation, e.g. 1e6)
    #[arg(long, value_name = "COUNT")]
    pub samples: Option<String>,
    /// Bond-addition sweeps (accepts scientific notation)
    #[arg(long, value_name = "COUNT")]
    pub sweeps: Option<String>,
    /// Master RNG seed; the PERCOLAB_SEED environment variable sets the default
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, value_name = "THREADS")]
    pub workers: Option<usize>,
    /// Significance multiplier, in standard errors
    #[arg(long, value_name = "SIGMAS")]
    pub z: Option<f64>,
    /// Confidence level of reported intervals, a probability in (0, 1)
    #[arg(long)]
    pub level: Option<f64>,
    /// Exponent constant of the subcritical lower bound (dimensionless, > 0)
    #[arg(long)]
    pub c1: Option<f64>,
    /// Base constant of the subcritical upper bound (dimensionless, > 0)
    #[arg(long)]
    pub c2: Option<f64>,
    /// Constant of the supercritical d >= 3 upper bound (dimensionless, >= 0)
    #[arg(long)]
    pub c: Option<f64>,
    /// Bound pair to check
    #[arg(long, value_enum)]
    pub bound: Option<BoundArg>,
    /// Decay form fixing the power correction
    #[arg(long, value_enum)]
    pub form: Option<FormArg>,
    /// Curve source for analysis subcommands
    #[arg(long, value_enum)]
    pub source: Option<Source>,
    /// Earlier JSON report to read the curve from (with --source file)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Fit window `lo..hi` in lattice spacings (inclusive)
    #[arg(long, value_name = "LO..HI")]
    pub window: Option<String>,
    /// Correlation length for the ratio prediction, in lattice spacings (fitted if absent)
    #[arg(long, value_name = "SPACINGS")]
    pub xi: Option<f64>,
    /// Largest bond count accepted by exhaustive enumeration
    #[arg(long, value_name = "BONDS")]
    pub cap: Option<u32>,
    /// Per-configuration event evaluation strategy
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Write the JSON report here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write the curve as CSV
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Exit with status 2 when a statistical verdict is inconclusive
    #[arg(long)]
    pub strict: bool,
}

/// Numbers that may be written as integers, floats or strings such as "1e6".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Count {
    Int(u64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NSpec {
    List(Vec<u32>),
    Text(String),
}

/// Config-file contents: the same keys as the flags, in snake_case.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileValues {
    d: Option<usize>,
    n_max: Option<u32>,
    margin: Option<u32>,
    lo: Option<Vec<i64>>,
    hi: Option<Vec<i64>>,
    p: Option<f64>,
    p_grid: Option<Vec<f64>>,
    n: Option<NSpec>,
    event: Option<EventArg>,
    samples: Option<Count>,
    sweeps: Option<Count>,
    seed: Option<u64>,
    workers: Option<usize>,
    z: Option<f64>,
    level: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c: Option<f64>,
    bound: Option<BoundArg>,
    form: Option<FormArg>,
    source: Option<Source>,
    input: Option<PathBuf>,
    window: Option<String>,
    xi: Option<f64>,
    cap: Option<u32>,
    strategy: Option<StrategyArg>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    strict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Lattice {
    Box(BoxSpec),
    /// Explicit corners, for fixtures a box spec cannot describe.
    Bounds {
        lo: Vec<i64>,
        hi: Vec<i64>,
    },
}

impl Lattice {
    pub fn dimension(&self) -> usize {
        match self {
            Lattice::Box(s) => s.d,
            Lattice::Bounds { lo, .. } => lo.len(),
        }
    }

    pub fn build(&self) -> percolab::Result<LatticeGraph> {
        match self {
            Lattice::Box(s) => s.build(),
            Lattice::Bounds { lo, hi } => LatticeGraph::from_bounds(lo, hi),
        }
    }

    /// Largest `n` with `(n, 0, ..., 0)` inside the box.
    fn max_n(&self) -> Option<u32> {
        let (lo, hi) = match self {
            Lattice::Box(s) => s.bounds(),
            Lattice::Bounds { lo, hi } => (lo.clone(), hi.clone()),
        };
        let inside = lo.iter().zip(&hi).all(|(&l, &h)| l <= 0 && 0 <= h);
        (inside && hi[0] >= 0).then(|| u32::try_from(hi[0]).unwrap_or(u32::MAX))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub strict: bool,
}

/// Fully resolved run description, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Kind,
    pub lattice: Lattice,
    pub p: Option<f64>,
    pub p_grid: Option<Vec<f64>>,
    pub n_list: Vec<u32>,
    pub event: EventKind,
    pub samples: u64,
    pub sweeps: u64,
    pub seed: u64,
    pub workers: usize,
    pub z: f64,
    pub level: f64,
    pub bound_params: BoundParams,
    pub bound: BoundKind,
    pub form: OzForm,
    pub source: Source,
    pub input: Option<PathBuf>,
    pub window: Option<(u32, u32)>,
    pub xi: Option<f64>,
    pub cap: u32,
    pub strategy: Strategy,
    pub output: OutputSpec,
}

/// Parses argv (including the program name) into a validated config.
/// `Err(Usage)` carries clap's rendered message; help and version requests
/// come back as `Ok(None)` after printing.
pub fn parse_args<I, T>(argv: I) -> CliResult<Option<RunConfig>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(None)
                }
                _ => Err(CliError::Usage(e.render().to_string())),
            };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    resolve(cli.command, env_seed.as_deref()).map(Some)
}

pub fn parse_count(field: &'static str, text: &str) -> CliResult<u64> {
    let t = text.trim().replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t
        .parse()
        .map_err(|_| CliError::invalid(field, format!("`{text}` is not a count")))?;
    count_from_float(field, f)
}

fn count_from_float(field: &'static str, f: f64) -> CliResult<u64> {
    // 2^53: every integer up to here is exact in f64
    if f.fract() != 0.0 || !(0.0..=9_007_199_254_740_992.0).contains(&f) {
        return Err(CliError::invalid(
            field,
            format!("{f} is not a nonnegative integer count"),
        ));
    }
    Ok(f as u64)
}

fn count_value(field: &'static str, c: &Count) -> CliResult<u64> {
    match c {
        Count::Int(v) => Ok(*v),
        Count::Float(f) => count_from_float(field, *f),
        Count::Text(t) => parse_count(field, t),
    }
}

/// `a..b` and `a..=b` are inclusive; otherwise a comma-separated list.
pub fn parse_n_list(text: &str) -> CliResult<Vec<u32>> {
    let num = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| CliError::invalid("n", format!("`{s}` is not a distance")))
    };
    let t = text.trim();
    if let Some((a, b)) = t.split_once("..") {
        let a = num(a)?;
        let b = num(b.strip_prefix('=').unwrap_or(b))?;
        if b < a {
            return Err(CliError::invalid("n", format!("empty range `{text}`")));
        }
        return Ok((a..=b).collect());
    }
    t.split(',').map(num).collect()
}

fn parse_window(text: &str) -> CliResult<(u32, u32)> {
    let bad = || CliError::invalid("window", format!("expected `lo..hi`, got `{text}`"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if b <= a {
        return Err(bad());
    }
    Ok((a, b))
}

fn read_config_file(path: &Path) -> CliResult<FileValues> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Merges flags over the config file and validates the result.
pub fn resolve(command: Command, env_seed: Option<&str>) -> CliResult<RunConfig> {
    let (kind, flags) = command.split();
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => FileValues::default(),
    };
    let env_seed = env_seed
        .map(|s| {
            s.trim().parse::<u64>().map_err(|_| {
                CliError::invalid("seed", format!("{SEED_ENV}=`{s}` is not an integer"))
            })
        })
        .transpose()?;

    macro_rules! pick {
        ($f:ident) => {
            flags.$f.clone().or(file.$f.clone())
        };
    }

    let lattice = match (pick!(lo), pick!(hi)) {
        (Some(lo), Some(hi)) => {
            if let Some(d) = pick!(d) {
                if d != lo.len() {
                    return Err(CliError::invalid(
                        "d",
                        format!(
                            "d = {d} disagrees with the {}-dimensional corners",
                            lo.len()
                        ),
                    ));
                }
            }
            if pick!(n_max).is_some() || pick!(margin).is_some() {
                return Err(CliError::invalid(
                    "lo",
                    "explicit corners exclude n_max and margin",
                ));
            }
            Lattice::Bounds { lo, hi }
        }
        (None, None) => Lattice::Box(BoxSpec::new(
            pick!(d).unwrap_or(2),
            pick!(n_max).unwrap_or(8),
            pick!(margin).unwrap_or(8),
        )),
        (Some(_), None) => return Err(CliError::invalid("hi", "--lo needs a matching --hi")),
        (None, Some(_)) => return Err(CliError::invalid("lo", "--hi needs a matching --lo")),
    };
    let d = lattice.dimension();
    if d == 0 {
        return Err(CliError::invalid("d", "dimension must be at least 1"));
    }
    if let Lattice::Bounds { lo, hi } = &lattice {
        if lo.len() != hi.len() {
            return Err(CliError::invalid("hi", "corners have different dimensions"));
        }
    }
    let max_n = lattice
        .max_n()
        .ok_or_else(|| CliError::invalid("lo", "the box does not contain the origin"))?;

    let p = pick!(p);
    if let Some(p) = p {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::invalid("p", format!("{p} is outside [0, 1]")));
        }
    }
    let p_grid = pick!(p_grid);
    if let Some(grid) = &p_grid {
        if grid.is_empty() {
            return Err(CliError::invalid("p_grid", "empty grid"));
        }
        if let Some(bad) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(CliError::invalid(
                "p_grid",
                format!("{bad} is outside [0, 1]"),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::invalid(
                "p_grid",
                "grid must be strictly increasing",
            ));
        }
    }

    let n_list = match (flags.n.as_deref(), file.n.clone()) {
        (Some(text), _) => parse_n_list(text)?,
        (None, Some(NSpec::Text(text))) => parse_n_list(&text)?,
        (None, Some(NSpec::List(list))) => list,
        (None, None) => {
            let start = if kind == Kind::Exact { 0 } else { 1 };
            (start.min(max_n)..=max_n).collect()
        }
    };
    if n_list.is_empty() {
        return Err(CliError::invalid("n", "empty list of distances"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::invalid(
            "n",
            "distances must be strictly increasing",
        ));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > max_n) {
        return Err(CliError::invalid(
            "n",
            format!("n = {n} lies outside the box (max {max_n})"),
        ));
    }

    let samples = match (&flags.samples, &file.samples) {
        (Some(t), _) => parse_count("samples", t)?,
        (None, Some(c)) => count_value("samples", c)?,
        (None, None) => DEFAULT_SAMPLES,
    };
    let sweeps = match (&flags.sweeps, &file.sweeps) {
        (Some(t), _) => parse_count("sweeps", t)?,
        (None, Some(c)) => count_value("sweeps", c)?,
        (None, None) => DEFAULT_SWEEPS,
    };
    if samples == 0 {
        return Err(CliError::invalid("samples", "must be at least 1"));
    }
    if sweeps == 0 {
        return Err(CliError::invalid("sweeps", "must be at least 1"));
    }
    let seed = pick!(seed).or(env_seed).unwrap_or(DEFAULT_SEED);
    let workers = pick!(workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::invalid("workers", "must be at least 1"));
    }
    let z = pick!(z).unwrap_or(DEFAULT_Z);
    if !(z >= 0.0 && z.is_finite()) {
        return Err(CliError::invalid(
            "z",
            format!("{z} is not a nonnegative multiplier"),
        ));
    }
    let level = pick!(level).unwrap_or(DEFAULT_LEVEL);
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::invalid(
            "level",
            format!("{level} is outside (0, 1)"),
        ));
    }
    let defaults = BoundParams::defaults_for(d);
    let bound_params = BoundParams {
        c1: pick!(c1).unwrap_or(defaults.c1),
        c2: pick!(c2).unwrap_or(defaults.c2),
        c: pick!(c).unwrap_or(defaults.c),
    };
    for (field, v) in [("c1", bound_params.c1), ("c2", bound_params.c2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::invalid(
                field,
                format!("{v} is not a positive constant"),
            ));
        }
    }
    if !(bound_params.c >= 0.0 && bound_params.c.is_finite()) {
        return Err(CliError::invalid(
            "c",
            format!("{} is not a nonnegative constant", bound_params.c),
        ));
    }

    let bound: BoundKind = pick!(bound).map_or(BoundKind::Lemma2, Into::into);
    let event_flag: Option<EventKind> = pick!(event).map(Into::into);
    let form: OzForm = match pick!(form) {
        Some(f) => f.into(),
        None => match (event_flag, d) {
            (Some(EventKind::Truncated), 2) => OzForm::Lemma5,
            (Some(EventKind::Truncated), d) if d >= 3 => OzForm::Lemma3,
            _ => OzForm::Lemma1,
        },
    };

    // The subcommand or the chosen bound/form may pin the event.
    let implied = match kind {
        Kind::Tau => Some(EventKind::TwoPoint),
        Kind::TauTrunc => Some(EventKind::Truncated),
        Kind::CheckBounds => Some(match bound {
            BoundKind::Lemma2 => EventKind::TwoPoint,
            BoundKind::Lemma4 | BoundKind::Lemma6 => EventKind::Truncated,
        }),
        Kind::FitOz => Some(match form {
            OzForm::Lemma1 => EventKind::TwoPoint,
            OzForm::Lemma3 | OzForm::Lemma5 => EventKind::Truncated,
        }),
        _ => None,
    };
    let event = match (event_flag, implied) {
        (Some(e), Some(i)) if e != i => {
            return Err(CliError::invalid(
                "event",
                format!(
                    "`{}` conflicts with `{}`, which needs `{}`",
                    e.as_str(),
                    kind.as_str(),
                    i.as_str()
                ),
            ))
        }
        (e, i) => i.or(e).unwrap_or(EventKind::TwoPoint),
    };

    let source = pick!(source).unwrap_or(Source::Mc);
    let input = pick!(input);
    let window = pick!(window).map(|w| parse_window(&w)).transpose()?;
    let xi = pick!(xi);
    if let Some(xi) = xi {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(CliError::invalid(
                "xi",
                format!("{xi} is not a positive length"),
            ));
        }
    }
    let cap = pick!(cap).unwrap_or(DEFAULT_ENUMERATION_CAP);
    let strategy: Strategy = pick!(strategy).map_or(Strategy::default(), Into::into);
    let output = OutputSpec {
        json: pick!(out),
        csv: pick!(csv),
        strict: flags.strict || file.strict.unwrap_or(false),
    };

    let cfg = RunConfig {
        subcommand: kind,
        lattice,
        p,
        p_grid,
        n_list,
        event,
        samples,
        sweeps,
        seed,
        workers,
        z,
        level,
        bound_params,
        bound,
        form,
        source,
        input,
        window,
        xi,
        cap,
        strategy,
        output,
    };
    validate_combination(&cfg)?;
    Ok(cfg)
}

/// Checks that depend on the subcommand.
fn validate_combination(cfg: &RunConfig) -> CliResult<()> {
    let d = cfg.lattice.dimension();
    let needs_p = matches!(
        cfg.subcommand,
        Kind::Tau
            | Kind::TauTrunc
            | Kind::MonoCheck
            | Kind::CheckBounds
            | Kind::Ratio
            | Kind::FitOz
    ) && cfg.source != Source::File;
    if needs_p && cfg.p.is_none() {
        return Err(CliError::invalid(
            "p",
            format!("`{}` needs a bond density", cfg.subcommand.as_str()),
        ));
    }
    match cfg.subcommand {
        Kind::Sweep | Kind::MonoScan if cfg.p_grid.is_none() => {
            return Err(CliError::invalid(
                "p_grid",
                format!(
                    "`{}` needs a grid of bond densities",
                    cfg.subcommand.as_str()
                ),
            ))
        }
        Kind::Sweep if cfg.event == EventKind::Truncated => {
            return Err(CliError::invalid(
                "event",
                "sweeps need an increasing event; truncated is not",
            ))
        }
        Kind::CheckBounds => {
            if let Some(p) = cfg.p {
                if !(p > 0.0 && p < 1.0) {
                    return Err(CliError::invalid(
                        "p",
                        format!("{p} must lie strictly inside (0, 1)"),
                    ));
                }
            }
            match cfg.bound {
                BoundKind::Lemma4 if d < 3 => {
                    return Err(CliError::invalid(
                        "bound",
                        format!("lemma4 applies to d >= 3 only (got d = {d})"),
                    ))
                }
                BoundKind::Lemma6 if d != 2 => {
                    return Err(CliError::invalid(
                        "bound",
                        format!("lemma6 needs d = 2 (got d = {d})"),
                    ))
                }
                _ => {}
            }
        }
        Kind::FitOz => {
            cfg.form
                .exponent(d)
                .map_err(|e| CliError::invalid("form", e.to_string()))?;
        }
        _ => {}
    }
    let analysis = matches!(
        cfg.subcommand,
        Kind::FitOz | Kind::CheckBounds | Kind::Ratio | Kind::MonoCheck
    );
    if cfg.source == Source::File {
        if !analysis {
            return Err(CliError::invalid(
                "source",
                format!("`{}` computes its own curve", cfg.subcommand.as_str()),
            ));
        }
        if cfg.input.is_none() {
            return Err(CliError::invalid(
                "input",
                "--source file needs --input PATH",
            ));
        }
    }
    if cfg.source == Source::Exact && analysis {
        let bonds = cfg.lattice.build()?.bond_count();
        if bonds > cfg.cap {
            return Err(CliError::invalid(
                "source",
                format!(
                    "exact source needs at most {} bonds, the box has {bonds}",
                    cfg.cap
                ),
            ));
        }
    }
    Ok(())
}
