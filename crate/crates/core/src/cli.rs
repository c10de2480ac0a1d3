//! `tf-angular` command-line front end.
//!
//! Every command writes one table (CSV or JSON) preceded by a provenance
//! block and followed by a summary block. Apart from the `timestamp` entry
//! the output is a pure function of the arguments and the cache file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::madelung::{kappa_madelung, madelung_occupations, madelung_order_to};
use crate::meanfield::{
    find_madelung_deviation, LastElectron, MeanFieldAtom, MeanFieldSettings, UnboundPolicy,
};
use crate::potentials::{make_potential, PotentialKind, PotentialSpec, TietzPotential};
use crate::semiclassics::{
    canonical_e, kappa, kappa_normalization, kappa_table, lambda_max, semiclassical_point,
};
use crate::tf_solver::{load_solution, save_solution, solve_tf_with, SolverSettings, TfSolution};

/// Environment variable naming the default TF cache file.
pub const CACHE_ENV: &str = "TF_ANGULAR_CACHE";

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "tf-angular",
    version,
    about = "Thomas-Fermi angular momentum distribution and mean-field shell filling"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Key-value file with defaults (`key = value` per line, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Thomas-Fermi equation and write the cache file.
    SolveTf(SolveArgs),
    /// Tabulate κ(λ) next to the Madelung distribution.
    Kappa(KappaArgs),
    /// Semiclassical e_G and n, or the canonical energy e(λ, n).
    Semiclassical(SemiclassicalArgs),
    /// Madelung subshell table, or Madelung occupations at one z.
    Madelung(MadelungArgs),
    /// Mean-field occupations N_ℓ at one z.
    Occupations(OccupationArgs),
    /// χ(λ, z) against κ(λ) over a list of z.
    Converge(ConvergeArgs),
    /// First z where mean-field filling departs from the Madelung rule.
    Deviation(DeviationArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Cache file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Debug, Args)]
struct CacheArg {
    /// TF cache file (default: $TF_ANGULAR_CACHE or `tf` in the config file).
    #[arg(long)]
    tf: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KappaArgs {
    #[command(flatten)]
    cache: CacheArg,
    /// Number of λ intervals.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Potential in the κ integral: tf or tietz.
    #[arg(long, default_value = "tf")]
    potential: String,
    /// Tietz shape parameter (default reproduces the Madelung distribution).
    #[arg(long)]
    shape: Option<f64>,
}

#[derive(Debug, Args)]
struct SemiclassicalArgs {
    #[command(flatten)]
    cache: CacheArg,
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    /// Chemical potential shifts for e_G and n.
    #[arg(long, value_delimiter = ',', conflicts_with = "n_target")]
    mu: Vec<f64>,
    /// Electron numbers for the canonical energy.
    #[arg(long, value_delimiter = ',')]
    n_target: Vec<f64>,
}

#[derive(Debug, Args)]
struct MadelungArgs {
    /// Tabulate subshells starting at or below this z.
    #[arg(long)]
    zmax: Option<u64>,
    /// Report occupations `ell,count` at this z instead.
    #[arg(long, conflicts_with = "zmax")]
    z: Option<u64>,
}

#[derive(Debug, Args)]
struct MeanFieldArgs {
    #[arg(long)]
    step_factor: Option<f64>,
    #[arg(long)]
    box_scaled: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Fail instead of stopping at the threshold when z exceeds the bound states.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct OccupationArgs {
    #[command(flatten)]
    cache: CacheArg,
    #[arg(long)]
    z: u64,
    /// λ values for which χ(λ, z) is reported in the summary.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Emit the occupied shells instead of per-ℓ counts.
    #[arg(long)]
    shells: bool,
    #[command(flatten)]
    mean_field: MeanFieldArgs,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    cache: CacheArg,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    z: Vec<u64>,
    #[command(flatten)]
    mean_field: MeanFieldArgs,
}

#[derive(Debug, Args)]
struct DeviationArgs {
    #[command(flatten)]
    cache: CacheArg,
    #[arg(long)]
    zmax: u64,
    /// Halve the radial step.
    #[arg(long)]
    refine: bool,
    #[command(flatten)]
    mean_field: MeanFieldArgs,
}

/// Values from the `--config` file.
#[derive(Debug, Default)]
struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "tf",
    "format",
    "output",
    "tolerance",
    "x_max",
    "grid_points",
    "steps",
    "lambda_min",
    "lambda_max",
    "step_factor",
    "box_scaled",
    "rel_tol",
    "unbound",
];

impl ConfigFile {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = k.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{}`",
                    i + 1,
                    k.trim()
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad value for `{key}`: `{v}`"))),
        }
    }

    fn pick<T: std::str::FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        match cli {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

/// A table cell.
#[derive(Debug, Clone)]
enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_sig(*v, 12),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

struct Report {
    command: &'static str,
    metadata: Vec<(String, Value)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, Value)>,
}

impl Report {
    fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self {
            command,
            metadata: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.push((key.into(), value.into()));
    }

    fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.push((key.into(), value.into()));
    }

    fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn render(&self, format: Format, timestamp: u64) -> String {
        let mut meta = vec![
            (
                "tool".to_string(),
                json!(format!("tf-angular {}", env!("CARGO_PKG_VERSION"))),
            ),
            ("command".to_string(), json!(self.command)),
        ];
        meta.extend(self.metadata.iter().cloned());
        meta.push(("timestamp".into(), json!(timestamp)));
        match format {
            Format::Csv => {
                let mut out = String::new();
                for (k, v) in &meta {
                    let _ = writeln!(out, "# {k}: {}", plain(v));
                }
                let _ = writeln!(out, "{}", self.columns.join(","));
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                for (k, v) in &self.summary {
                    let _ = writeln!(out, "# {k}: {}", plain(v));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let doc = json!({
                    "metadata": meta.into_iter().collect::<Map<_, _>>(),
                    "columns": self.columns,
                    "rows": rows,
                    "summary": self.summary.iter().cloned().collect::<Map<_, _>>(),
                });
                let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => format_sig(x, 12),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Seconds since the epoch, or `$SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// A loaded cache plus its checksum.
struct Cache {
    path: PathBuf,
    sha256: String,
    solution: Arc<TfSolution>,
}

impl Cache {
    fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let solution = load_solution(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            solution: Arc::new(solution),
        })
    }

    fn describe(&self, report: &mut Report) {
        report.meta("tf_cache", self.path.display().to_string());
        report.meta("tf_cache_sha256", self.sha256.clone());
        report.meta("tf_tolerance", real(self.solution.tolerance));
        report.meta("tf_slope_b", real(self.solution.slope_b));
    }
}

/// Failure of a run, mapped to an exit code.
enum Failure {
    /// Bad usage; the message is followed by the usage text.
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let _ = writeln!(std::io::stderr(), "{}", Cli::command().render_usage());
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let format = match cli.format {
        Some(f) => f,
        None => match config.values.get("format").map(String::as_str) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                return Err(Error::Config(format!("bad value for `format`: `{other}`")).into())
            }
        },
    };
    let output: Option<PathBuf> = match cli.output.clone() {
        Some(p) => Some(p),
        None => config.get("output")?,
    };
    let report = match cli.command {
        Command::SolveTf(a) => solve(&a, &config)?,
        Command::Kappa(a) => kappa_cmd(&a, &config)?,
        Command::Semiclassical(a) => semiclassical_cmd(&a, &config)?,
        Command::Madelung(a) => madelung_cmd(&a)?,
        Command::Occupations(a) => occupations_cmd(&a, &config)?,
        Command::Converge(a) => converge_cmd(&a, &config)?,
        Command::Deviation(a) => deviation_cmd(&a, &config)?,
    };
    let text = report.render(format, timestamp());
    match output {
        Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn open_cache(arg: &CacheArg, config: &ConfigFile) -> std::result::Result<Cache, Failure> {
    let path = arg
        .tf
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .or(config.get::<PathBuf>("tf")?);
    match path {
        Some(p) => Ok(Cache::open(&p)?),
        None => Err(Failure::Usage(format!(
            "no TF cache given: pass --tf <FILE> (or set {CACHE_ENV}); create one with `tf-angular solve-tf --out <FILE>`"
        ))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be >= 0, got {v}"
        )))
    }
}

fn mean_field_settings(a: &MeanFieldArgs, config: &ConfigFile) -> Result<MeanFieldSettings> {
    let d = MeanFieldSettings::default();
    let unbound = if a.strict {
        UnboundPolicy::Strict
    } else {
        match config.values.get("unbound").map(String::as_str) {
            None | Some("fill-to-threshold") => UnboundPolicy::FillToThreshold,
            Some("strict") => UnboundPolicy::Strict,
            Some(other) => {
                return Err(Error::Config(format!("bad value for `unbound`: `{other}`")))
            }
        }
    };
    Ok(MeanFieldSettings {
        step_factor: positive(
            "step factor",
            config.pick(a.step_factor, "step_factor", d.step_factor)?,
        )?,
        box_scaled: positive(
            "box size",
            config.pick(a.box_scaled, "box_scaled", d.box_scaled)?,
        )?,
        rel_tol: positive(
            "relative tolerance",
            config.pick(a.rel_tol, "rel_tol", d.rel_tol)?,
        )?,
        max_box_doublings: d.max_box_doublings,
        unbound,
    })
}

fn describe_mean_field(report: &mut Report, s: &MeanFieldSettings) {
    report.meta("step_factor", real(s.step_factor));
    report.meta("box_scaled", real(s.box_scaled));
    report.meta("eigen_rel_tol", real(s.rel_tol));
    report.meta(
        "unbound_policy",
        match s.unbound {
            UnboundPolicy::FillToThreshold => "fill-to-threshold",
            UnboundPolicy::Strict => "strict",
        },
    );
}

fn solve(a: &SolveArgs, config: &ConfigFile) -> Result<Report> {
    let d = SolverSettings::default();
    let settings = SolverSettings {
        tolerance: positive(
            "tolerance",
            config.pick(a.tolerance, "tolerance", d.tolerance)?,
        )?,
        x_max: positive("x_max", config.pick(a.x_max, "x_max", d.x_max)?)?,
        grid_points: config.pick(a.grid_points, "grid_points", d.grid_points)?,
        ..d
    };
    let sol = solve_tf_with(&settings)?;
    save_solution(&sol, &a.out)?;
    let cache = Cache::open(&a.out)?;
    let mut r = Report::new("solve-tf", &["key", "value"]);
    cache.describe(&mut r);
    r.meta("x_max", real(settings.x_max));
    r.meta("grid_points", settings.grid_points);
    r.row(vec!["slope_b".into(), sol.slope_b.into()]);
    r.row(vec!["length_scale_a".into(), sol.length_scale_a.into()]);
    r.row(vec!["join_x".into(), sol.join_x.into()]);
    r.row(vec!["tail_match_x".into(), sol.tail_match_x.into()]);
    r.row(vec!["tail_coefficient".into(), sol.tail_coefficient.into()]);
    r.row(vec!["tail_amplitude".into(), sol.tail_amplitude.into()]);
    Ok(r)
}

fn kappa_cmd(a: &KappaArgs, config: &ConfigFile) -> std::result::Result<Report, Failure> {
    let cache = open_cache(&a.cache, config)?;
    let steps: usize = config.pick(a.steps, "steps", 200)?;
    if steps < 2 {
        return Err(
            Error::InvalidArgument(format!("steps must be at least 2, got {steps}")).into(),
        );
    }
    let lo = non_negative("lambda_min", config.pick(a.lambda_min, "lambda_min", 0.0)?)?;
    let hi = positive("lambda_max", config.pick(a.lambda_max, "lambda_max", 1.0)?)?;
    if hi <= lo {
        return Err(Error::InvalidArgument(format!(
            "need lambda_min < lambda_max, got {lo} and {hi}"
        ))
        .into());
    }
    let kind: PotentialKind = a.potential.parse()?;
    let spec = match kind {
        PotentialKind::Tf => PotentialSpec::tf(1.0),
        PotentialKind::Tietz => {
            PotentialSpec::tietz(1.0, a.shape.unwrap_or_else(TietzPotential::madelung_shape))
        }
        PotentialKind::Coulomb => {
            return Err(
                Error::InvalidArgument("κ diverges for the Coulomb potential".into()).into(),
            )
        }
    };
    let pot = make_potential(&spec, Some(cache.solution.clone()))?;
    let table = kappa_table(pot.as_ref(), lo, hi, steps)?;
    let mut r = Report::new("kappa", &["lambda", "kappa", "kappa_madelung"]);
    cache.describe(&mut r);
    r.meta("potential", pot.label());
    r.meta("steps", steps);
    for (&l, &k) in table.lambda_grid.iter().zip(&table.kappa_values) {
        r.row(vec![l.into(), k.into(), kappa_madelung(l).into()]);
    }
    let madelung_table: f64 = table
        .lambda_grid
        .windows(2)
        .map(|w| 2.0 * (w[1] - w[0]) * (w[0] * kappa_madelung(w[0]) + w[1] * kappa_madelung(w[1])))
        .sum();
    r.note("lambda_max", real(table.lambda_max));
    r.note("normalization", real(kappa_normalization(pot.as_ref())?));
    r.note("normalization_table", real(table.normalization()));
    r.note("normalization_madelung_table", real(madelung_table));
    Ok(r)
}

fn semiclassical_cmd(
    a: &SemiclassicalArgs,
    config: &ConfigFile,
) -> std::result::Result<Report, Failure> {
    for &l in &a.lambda {
        non_negative("lambda", l)?;
    }
    for &m in &a.mu {
        non_negative("mu", m)?;
    }
    for &n in &a.n_target {
        non_negative("n", n)?;
    }
    let cache = open_cache(&a.cache, config)?;
    let pot = make_potential(&PotentialSpec::tf(1.0), Some(cache.solution.clone()))?;
    let mut r;
    if !a.n_target.is_empty() {
        r = Report::new("semiclassical", &["lambda", "n_target", "mu_star", "e"]);
        cache.describe(&mut r);
        for &l in &a.lambda {
            positive("lambda", l)?;
            for &n in &a.n_target {
                let c = canonical_e(pot.as_ref(), l, n)?;
                r.row(vec![l.into(), n.into(), c.mu_star.into(), c.e.into()]);
            }
        }
    } else {
        let mus = if a.mu.is_empty() {
            vec![0.0]
        } else {
            a.mu.clone()
        };
        r = Report::new("semiclassical", &["lambda", "mu", "e_g", "n"]);
        cache.describe(&mut r);
        for &l in &a.lambda {
            for &m in &mus {
                if l == 0.0 && m == 0.0 {
                    return Err(Error::InvalidArgument(
                        "e_G is not defined at lambda = mu = 0".into(),
                    )
                    .into());
                }
                let p = semiclassical_point(pot.as_ref(), l, m)?;
                r.row(vec![l.into(), m.into(), p.e_g.into(), p.n.into()]);
            }
        }
    }
    r.note("lambda_max", real(lambda_max(pot.as_ref())?));
    Ok(r)
}

fn madelung_cmd(a: &MadelungArgs) -> Result<Report> {
    if let Some(z) = a.z {
        if z == 0 {
            return Err(Error::InvalidArgument("z must be at least 1".into()));
        }
        let mut r = Report::new("madelung", &["ell", "count"]);
        r.meta("z", z);
        for (ell, count) in madelung_occupations(z)? {
            r.row(vec![ell.into(), count.into()]);
        }
        return Ok(r);
    }
    let zmax = a.zmax.unwrap_or(118);
    if zmax == 0 {
        return Err(Error::InvalidArgument("zmax must be at least 1".into()));
    }
    let table = madelung_order_to(zmax);
    let mut r = Report::new("madelung", &["ell", "n", "start_z", "capacity"]);
    r.meta("zmax", zmax);
    for s in &table.shells {
        r.row(vec![
            s.ell.into(),
            s.n.into(),
            s.start_z.into(),
            s.capacity.into(),
        ]);
    }
    Ok(r)
}

fn occupations_cmd(
    a: &OccupationArgs,
    config: &ConfigFile,
) -> std::result::Result<Report, Failure> {
    if a.z == 0 {
        return Err(Error::InvalidArgument("z must be at least 1".into()).into());
    }
    for &l in &a.lambda {
        positive("lambda", l)?;
    }
    let settings = mean_field_settings(&a.mean_field, config)?;
    let cache = open_cache(&a.cache, config)?;
    let atom = MeanFieldAtom::with_settings(cache.solution.clone(), a.z, settings)?;
    let zc = (a.z as f64).cbrt();
    let mut r;
    if a.shells {
        let (mu, shells) = atom.fermi_level()?;
        r = Report::new(
            "occupations",
            &["z", "ell", "radial_index", "eigenvalue", "degeneracy"],
        );
        cache.describe(&mut r);
        describe_mean_field(&mut r, &settings);
        for s in &shells {
            r.row(vec![
                a.z.into(),
                s.ell.into(),
                s.radial_index.into(),
                s.eigenvalue.into(),
                s.degeneracy.into(),
            ]);
        }
        r.note("fermi_level", real(mu));
        r.note("fermi_level_scaled", real(mu / atom.energy_unit()));
    } else {
        let rep = atom.occupations(&a.lambda)?;
        r = Report::new("occupations", &["z", "ell", "N_ell", "chi_lambda"]);
        cache.describe(&mut r);
        describe_mean_field(&mut r, &settings);
        for (&ell, &n) in &rep.counts {
            let chi = n / (2.0 * (2.0 * ell as f64 + 1.0) * zc);
            r.row(vec![a.z.into(), ell.into(), n.into(), chi.into()]);
        }
        r.note("fermi_level", real(rep.fermi_level));
        r.note(
            "fermi_level_scaled",
            real(rep.fermi_level / atom.energy_unit()),
        );
        r.note("unbound_electrons", real(rep.unbound_electrons));
        r.note("tie_at_fermi_level", rep.tie);
        for c in &rep.chi {
            r.note(
                &format!("chi({})", format_sig(c.lambda, 12)),
                json!({"ell": c.ell, "chi": real(c.chi), "chi_alt": real(c.chi_alt)}),
            );
        }
    }
    Ok(r)
}

fn converge_cmd(a: &ConvergeArgs, config: &ConfigFile) -> std::result::Result<Report, Failure> {
    positive("lambda", a.lambda)?;
    if a.z.contains(&0) {
        return Err(Error::InvalidArgument("every z must be at least 1".into()).into());
    }
    let settings = mean_field_settings(&a.mean_field, config)?;
    let cache = open_cache(&a.cache, config)?;
    let pot = make_potential(&PotentialSpec::tf(1.0), Some(cache.solution.clone()))?;
    let k = kappa(pot.as_ref(), a.lambda)?;
    let mut r = Report::new("converge", &["z", "lambda", "chi", "kappa", "gap"]);
    cache.describe(&mut r);
    describe_mean_field(&mut r, &settings);
    r.meta(
        "gap",
        if k > 0.0 {
            "|chi - kappa| / kappa"
        } else {
            "|chi - kappa|"
        },
    );
    for &z in &a.z {
        let atom = MeanFieldAtom::with_settings(cache.solution.clone(), z, settings)?;
        let c = atom.chi(a.lambda)?;
        let gap = if k > 0.0 {
            (c.chi - k).abs() / k
        } else {
            (c.chi - k).abs()
        };
        r.row(vec![
            z.into(),
            a.lambda.into(),
            c.chi.into(),
            k.into(),
            gap.into(),
        ]);
    }
    Ok(r)
}

fn deviation_cmd(a: &DeviationArgs, config: &ConfigFile) -> std::result::Result<Report, Failure> {
    if a.zmax < 2 {
        return Err(
            Error::InvalidArgument(format!("zmax must be at least 2, got {}", a.zmax)).into(),
        );
    }
    let mut settings = mean_field_settings(&a.mean_field, config)?;
    if a.refine {
        settings = settings.refined();
    }
    let cache = open_cache(&a.cache, config)?;
    let report = find_madelung_deviation(&cache.solution, a.zmax, &settings)?;
    let mut r = Report::new(
        "deviation",
        &[
            "z",
            "madelung_ell",
            "madelung_n",
            "mean_field_ell",
            "mean_field_n",
            "kind",
        ],
    );
    cache.describe(&mut r);
    describe_mean_field(&mut r, &settings);
    r.meta("zmax", a.zmax);
    for m in &report.mismatches {
        let (ml, mn) = m.madelung;
        let (fl, fn_, kind) = match &m.mean_field {
            LastElectron::Shell { ell, n } => (Cell::from(*ell), Cell::from(*n), "shell"),
            LastElectron::Tie { shells } => {
                let list: Vec<String> = shells.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                (Cell::Text(list.join(" ")), Cell::from(""), "tie")
            }
            LastElectron::Unbound => (Cell::from(""), Cell::from(""), "unbound"),
        };
        r.row(vec![m.z.into(), ml.into(), mn.into(), fl, fn_, kind.into()]);
    }
    let show = |v: Option<u64>| v.map_or(json!("none found"), |z| json!(z));
    r.note("first_deviation", show(report.first_deviation));
    r.note("first_shell_deviation", show(report.first_shell_deviation));
    r.note("mismatches", report.mismatches.len());
    Ok(r)
}
