//! The `radent` command line.
//!
//! Every subcommand accepts the model flags and an optional `--config` file
//! of `key = value` lines (keys are the long flag names; `#` starts a
//! comment). Flags override the file.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (bad flags or flag combination) |
//! | 3 | domain error |
//! | 4 | numerical failure (non positive definite, unnormalizable) |
//! | 5 | divergent angular-momentum sum (`D ≥ 5`) |
//! | 6 | convergence failure |
//! | 7 | enumeration budget exceeded |
//! | 8 | I/O error |
//! | 9 | malformed input file |
//! | 10 | a selftest or report check failed |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{
    fit_area_law, majorization_report, rg_report, sweep, Axis, PartitionRule, SweepPoint,
};
use crate::cache::ModeCache;
use crate::entanglement::{
    total_entanglement_with, EntanglementConfig, EntanglementResult, ExactModes, LSwitch,
    ModeSource, TailKind,
};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, ModelParams};
use crate::reduction::Partition;
use crate::selftest::run_selftest;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 10;

pub const CSV_HEADER: &str = "D,mu,N,n,R,S,E1,S_tail,E1_tail,l_switch,converged";

/// Exit code for an error category.
pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        "domain" => 3,
        "numerical" => 4,
        "divergence" => 5,
        "convergence" => 6,
        "budget" => 7,
        "io" => 8,
        "parse" => 9,
        _ => 1,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "radent",
    version,
    about = "Entanglement entropy of a free scalar field on a radial lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy and single-copy entanglement of one cut.
    Entropy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: Option<usize>,
    },
    /// Entropies along the radius, mass or dimension axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Option<String>,
        /// Cuts `a:b` (inclusive): the axis for radius sweeps, the fit window otherwise.
        #[arg(long = "trace-range")]
        trace_range: Option<String>,
        /// Comma-separated masses or dimensions; dimension sweeps default to 1.2..=4.7 in steps of 0.1.
        #[arg(long)]
        values: Option<String>,
    },
    /// Area-law fit of a sweep CSV.
    Fit {
        #[arg(long)]
        from: PathBuf,
        /// `auto` (D − 1 from the CSV) or a number.
        #[arg(long, default_value = "auto")]
        exponent: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entanglement loss under increasing mass.
    Rg {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly increasing masses.
        #[arg(long)]
        masses: Option<String>,
        #[arg(long)]
        trace: Option<usize>,
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Majorization of product spectra between consecutive cuts.
    Majorization {
        #[command(flatten)]
        common: Common,
        /// Comma-separated traced shell counts.
        #[arg(long)]
        traces: Option<String>,
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Oracle suite; exits with 10 if any check fails.
    Selftest {
        #[arg(long)]
        emit: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    dim: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    boundary: Option<String>,
    /// `direct` or `zeta`.
    #[arg(long)]
    tail: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<f64>,
    /// `auto` or a partial-wave index.
    #[arg(long)]
    lswitch: Option<String>,
    /// `csv`, `json` or `both`.
    #[arg(long)]
    emit: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cache directory; defaults to `$RADENT_CACHE_DIR` when set.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

const CONFIG_KEYS: &[&str] = &[
    "dim",
    "mass",
    "sites",
    "trace",
    "trace-range",
    "traces",
    "axis",
    "values",
    "masses",
    "boundary",
    "tail",
    "rel-tol",
    "lswitch",
    "emit",
    "out",
    "cache",
    "k-max",
];

/// Parses a `key = value` configuration file.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!(
                "config line {}: unknown key `{key}`",
                i + 1
            )));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Outcome<Self> {
        let file = match path {
            Some(p) => parse_config(&fs::read_to_string(p).map_err(Error::from)?)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Outcome<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v.parse().map(Some).map_err(|_| {
                Failure::Compute(Error::Parse(format!(
                    "config key `{key}`: cannot parse `{v}`"
                )))
            }),
            None => Ok(None),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Outcome<T> {
        self.get(flag, key)?
            .ok_or_else(|| Failure::Usage(format!("missing --{key}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Emit {
    Csv,
    Json,
    Both,
}

struct Resolved {
    params: ModelParams,
    cfg: EntanglementConfig,
    emit: Emit,
    out: Option<PathBuf>,
    cache: Option<PathBuf>,
}

fn parse_with<T: FromStr>(s: &str, what: &str) -> Outcome<T> {
    s.trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("invalid {what} `{s}`")))
}

fn parse_list(s: &str, what: &str) -> Outcome<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_with(t, what))
        .collect()
}

fn parse_range(s: &str) -> Outcome<(usize, usize)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("trace range `{s}` is not `a:b`")))?;
    let (a, b) = (parse_with(a, "trace range")?, parse_with(b, "trace range")?);
    if a > b {
        return Err(Failure::Usage(format!("trace range `{s}` is empty")));
    }
    Ok((a, b))
}

fn resolve(common: Common, settings: &Settings, default_emit: Emit) -> Outcome<Resolved> {
    let dim = settings.require(common.dim, "dim")?;
    let mass = settings.get(common.mass, "mass")?.unwrap_or(0.0);
    let sites = settings.require(common.sites, "sites")?;
    let boundary = match settings.get(common.boundary, "boundary")? {
        Some(b) => Boundary::from_str(&b).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Boundary::Dirichlet,
    };
    let tail = match settings.get(common.tail, "tail")?.as_deref() {
        None | Some("direct") => TailKind::Direct,
        Some("zeta") => TailKind::Zeta,
        Some(other) => return Err(Failure::Usage(format!("unknown tail method `{other}`"))),
    };
    let mut cfg = EntanglementConfig {
        tail,
        ..Default::default()
    };
    if let Some(t) = settings.get(common.rel_tol, "rel-tol")? {
        if !(t > 0.0) {
            return Err(Failure::Usage(format!(
                "--rel-tol must be positive, got {t}"
            )));
        }
        cfg.rel_tol = t;
    }
    cfg.l_switch = match settings.get(common.lswitch, "lswitch")?.as_deref() {
        None | Some("auto") => LSwitch::Auto,
        Some(v) => LSwitch::Fixed(parse_with(v, "--lswitch")?),
    };
    let emit = match settings.get(common.emit, "emit")?.as_deref() {
        None => default_emit,
        Some("csv") => Emit::Csv,
        Some("json") => Emit::Json,
        Some("both") => Emit::Both,
        Some(other) => return Err(Failure::Usage(format!("unknown --emit `{other}`"))),
    };
    let out = settings.get(common.out, "out")?;
    if emit == Emit::Both && out.is_none() {
        return Err(Failure::Usage("--emit both needs --out".into()));
    }
    let cache = settings.get(common.cache, "cache")?;
    let params = ModelParams::new(dim, mass, sites).with_boundary(boundary);
    params.validate()?;
    Ok(Resolved {
        params,
        cfg,
        emit,
        out,
        cache,
    })
}

fn open_source(cache: &Option<PathBuf>) -> Result<Box<dyn ModeSource>> {
    Ok(match cache {
        Some(dir) => Box::new(ModeCache::open(dir)?),
        None => match ModeCache::from_env()? {
            Some(c) => Box::new(c),
            None => Box::new(ExactModes::new()),
        },
    })
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Locale-independent text form with at most 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

/// Dimension grid used when `--values` is omitted, clear of D = 1 and D = 5.
pub fn default_dimensions() -> Vec<f64> {
    (12..=47).map(|k| k as f64 / 10.0).collect()
}

fn csv_row(params: &ModelParams, n: usize, radius: f64, r: &EntanglementResult) -> String {
    [
        fmt12(params.dim),
        fmt12(params.mass),
        params.sites.to_string(),
        n.to_string(),
        fmt12(radius),
        fmt12(r.S),
        fmt12(r.E1),
        fmt12(r.tail_S),
        fmt12(r.tail_E1),
        r.l_switch.to_string(),
        r.converged.to_string(),
    ]
    .join(",")
}

fn result_json(params: &ModelParams, n: usize, radius: f64, r: &EntanglementResult) -> Value {
    let per_l: Vec<Value> = r
        .per_l
        .iter()
        .map(|w| json!({"l": w.l, "nu": round12(w.nu), "S_l": round12(w.s), "E1_l": round12(w.e1)}))
        .collect();
    json!({
        "D": round12(params.dim),
        "mu": round12(params.mass),
        "N": params.sites,
        "n": n,
        "R": round12(radius),
        "boundary": params.boundary.as_str(),
        "S": round12(r.S),
        "E1": round12(r.E1),
        "per_l": per_l,
        "tail_S": round12(r.tail_S),
        "tail_E1": round12(r.tail_E1),
        "l_switch": r.l_switch,
        "converged": r.converged,
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes artifacts and returns what should go to stdout.
fn emit(
    emit: Emit,
    out: &Option<PathBuf>,
    csv: Option<String>,
    json: Option<String>,
) -> Result<String> {
    let mut stdout = String::new();
    let mut put = |ext: &str, body: String, only: bool| -> Result<()> {
        match out {
            Some(path) => {
                let target = if only {
                    path.clone()
                } else {
                    path.with_extension(ext)
                };
                write_atomic(&target, body.as_bytes())
            }
            None => {
                stdout.push_str(&body);
                Ok(())
            }
        }
    };
    match emit {
        Emit::Csv => put("csv", csv.unwrap_or_default(), true)?,
        Emit::Json => put("json", json.unwrap_or_default(), true)?,
        Emit::Both => {
            put("csv", csv.unwrap_or_default(), false)?;
            put("json", json.unwrap_or_default(), false)?;
        }
    }
    Ok(stdout)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Report {
    stdout: String,
    summary: String,
    ok: bool,
}

fn cmd_entropy(common: Common, trace: Option<usize>) -> Outcome<Report> {
    let settings = Settings::load(common.config.as_deref())?;
    let trace = settings.require(trace, "trace")?;
    let r = resolve(common, &settings, Emit::Json)?;
    let source = open_source(&r.cache)?;
    let part = Partition::new(trace, r.params.sites)?;
    let res = total_entanglement_with(&r.params, part, &r.cfg, source.as_ref())?;
    let radius = part.radius(r.params.spacing);
    let csv = format!(
        "{CSV_HEADER}\n{}\n",
        csv_row(&r.params, trace, radius, &res)
    );
    let json = json_text(&result_json(&r.params, trace, radius, &res));
    let stdout = emit(r.emit, &r.out, Some(csv), Some(json))?;
    Ok(Report {
        stdout,
        summary: format!(
            "entropy D={} mu={} N={} n={}: S={} E1={} l_switch={} converged={}",
            fmt12(r.params.dim),
            fmt12(r.params.mass),
            r.params.sites,
            trace,
            fmt12(res.S),
            fmt12(res.E1),
            res.l_switch,
            res.converged
        ),
        ok: true,
    })
}

fn sweep_artifacts(points: &[SweepPoint]) -> (String, String) {
    let mut csv = format!("{CSV_HEADER}\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{}",
            csv_row(&p.params, p.traced_sites, p.radius, &p.result)
        );
    }
    let rows: Vec<Value> = points
        .iter()
        .map(|p| result_json(&p.params, p.traced_sites, p.radius, &p.result))
        .collect();
    (csv, json_text(&Value::Array(rows)))
}

fn cmd_sweep(
    common: Common,
    axis: Option<String>,
    trace_range: Option<String>,
    values: Option<String>,
) -> Outcome<Report> {
    let settings = Settings::load(common.config.as_deref())?;
    let axis: Axis = match settings.get(axis, "axis")? {
        Some(a) => a
            .parse()
            .map_err(|e: Error| Failure::Usage(e.to_string()))?,
        None => Axis::Radius,
    };
    let range = settings
        .get(trace_range, "trace-range")?
        .map(|s| parse_range(&s))
        .transpose()?;
    let values = settings.get(values, "values")?;
    let r = resolve(common, &settings, Emit::Csv)?;
    let source = open_source(&r.cache)?;
    let (axis_values, rule) = match axis {
        Axis::Radius => {
            if values.is_some() {
                return Err(Failure::Usage(
                    "radius sweeps take --trace-range, not --values".into(),
                ));
            }
            let (a, b) = range
                .ok_or_else(|| Failure::Usage("radius sweep needs --trace-range a:b".into()))?;
            ((a..=b).map(|n| n as f64).collect(), PartitionRule::Window)
        }
        Axis::Mass | Axis::Dimension => {
            let rule = match range {
                Some((a, b)) => PartitionRule::Fixed((a..=b).collect()),
                None => PartitionRule::Window,
            };
            let list = match (values, axis) {
                (Some(v), _) => parse_list(&v, "--values")?,
                (None, Axis::Dimension) => default_dimensions(),
                (None, _) => {
                    return Err(Failure::Usage(format!("{axis} sweep needs --values")));
                }
            };
            if axis == Axis::Dimension {
                for d in list.iter().filter(|d| **d <= 1.1 || **d >= 4.8) {
                    log::warn!("D = {d} is close to a divergence of the sums over l");
                }
            }
            (list, rule)
        }
    };
    let result = sweep(
        &r.params,
        axis,
        &axis_values,
        &rule,
        &r.cfg,
        source.as_ref(),
    )?;
    let (csv, json) = sweep_artifacts(&result.points);
    let stdout = emit(r.emit, &r.out, Some(csv), Some(json))?;
    let mut summary = format!("sweep {axis}: {} points", result.points.len());
    if result.points.len() >= 3 {
        if let Ok(slopes) = result.slopes() {
            for s in slopes {
                let _ = write!(
                    summary,
                    "; at {}: k_S={} k_E={} ratio={}",
                    fmt12(s.axis_value),
                    fmt12(s.entropy.slope),
                    fmt12(s.single_copy.slope),
                    fmt12(s.ratio())
                );
            }
        }
    }
    Ok(Report {
        stdout,
        summary,
        ok: true,
    })
}

/// One row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub dim: f64,
    pub mass: f64,
    pub sites: usize,
    pub radius: f64,
    pub s: f64,
    pub e1: f64,
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse(format!("CSV lacks column `{name}`")))
    };
    let (d, mu, n_sites, r, s, e) = (
        idx("D")?,
        idx("mu")?,
        idx("N")?,
        idx("R")?,
        idx("S")?,
        idx("E1")?,
    );
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |j: usize| -> Result<f64> {
                f.get(j).and_then(|v| v.parse().ok()).ok_or_else(|| {
                    Error::Parse(format!("CSV row {}: bad column {}", i + 2, cols[j]))
                })
            };
            Ok(CsvRow {
                dim: num(d)?,
                mass: num(mu)?,
                sites: num(n_sites)? as usize,
                radius: num(r)?,
                s: num(s)?,
                e1: num(e)?,
            })
        })
        .collect()
}

fn cmd_fit(from: PathBuf, exponent: String, out: Option<PathBuf>) -> Outcome<Report> {
    let rows = read_sweep_csv(&fs::read_to_string(&from).map_err(Error::from)?)?;
    let fixed = match exponent.as_str() {
        "auto" => None,
        v => Some(parse_with::<f64>(v, "--exponent")?),
    };
    // One fit per (D, μ, N) group, in order of first appearance.
    let mut groups: Vec<((f64, f64, usize), Vec<&CsvRow>)> = Vec::new();
    for row in &rows {
        let key = (row.dim, row.mass, row.sites);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    let mut csv = String::from("D,mu,N,exponent,k_S,intercept_S,r2_S,k_E,intercept_E,r2_E,ratio\n");
    let mut summary = Vec::new();
    for ((dim, mass, sites), g) in &groups {
        let exp = fixed.unwrap_or(dim - 1.0);
        let fs_ = fit_area_law(&g.iter().map(|r| (r.radius, r.s)).collect::<Vec<_>>(), exp)?;
        let fe = fit_area_law(&g.iter().map(|r| (r.radius, r.e1)).collect::<Vec<_>>(), exp)?;
        let ratio = fs_.slope / fe.slope;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt12(*dim),
            fmt12(*mass),
            sites,
            fmt12(exp),
            fmt12(fs_.slope),
            fmt12(fs_.intercept),
            fmt12(fs_.r_squared),
            fmt12(fe.slope),
            fmt12(fe.intercept),
            fmt12(fe.r_squared),
            fmt12(ratio)
        );
        summary.push(format!(
            "D={} mu={} N={}: slope={} intercept={} R2={} | E1 slope={} intercept={} R2={}",
            fmt12(*dim),
            fmt12(*mass),
            sites,
            fmt12(fs_.slope),
            fmt12(fs_.intercept),
            fmt12(fs_.r_squared),
            fmt12(fe.slope),
            fmt12(fe.intercept),
            fmt12(fe.r_squared)
        ));
    }
    let stdout = match &out {
        Some(p) => {
            write_atomic(p, csv.as_bytes())?;
            String::new()
        }
        None => String::new(),
    };
    Ok(Report {
        stdout,
        summary: summary.join("\n"),
        ok: true,
    })
}

fn cmd_rg(
    common: Common,
    masses: Option<String>,
    trace: Option<usize>,
    k_max: Option<usize>,
) -> Outcome<Report> {
    let settings = Settings::load(common.config.as_deref())?;
    let masses = parse_list(&settings.require(masses, "masses")?, "--masses")?;
    let k_max = settings.get(k_max, "k-max")?.unwrap_or(50);
    let trace_opt = settings.get(trace, "trace")?;
    let r = resolve(common, &settings, Emit::Json)?;
    let trace = trace_opt.unwrap_or(r.params.sites / 2);
    let source = open_source(&r.cache)?;
    let part = Partition::new(trace, r.params.sites)?;
    let report = rg_report(&r.params, &masses, part, k_max, &r.cfg, source.as_ref())?;
    let json = json_text(&round_json(
        serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?,
    ));
    let mut csv = String::from("mu,k_S\n");
    for (m, k) in report.masses.iter().zip(&report.slopes) {
        let _ = writeln!(csv, "{},{}", fmt12(*m), fmt12(*k));
    }
    let stdout = emit(r.emit, &r.out, Some(csv), Some(json))?;
    let ok = report.passed();
    let summary = format!(
        "rg: slopes decreasing={} modewise={} majorization={}",
        report.slopes_decrease.passed,
        report.modewise.passed,
        report
            .majorization
            .as_ref()
            .map_or("skipped".to_string(), |c| c.passed.to_string())
    );
    Ok(Report {
        stdout,
        summary,
        ok,
    })
}

fn cmd_majorization(
    common: Common,
    traces: Option<String>,
    k_max: Option<usize>,
) -> Outcome<Report> {
    let settings = Settings::load(common.config.as_deref())?;
    let traces = parse_list(&settings.require(traces, "traces")?, "--traces")?;
    let k_max = settings.get(k_max, "k-max")?.unwrap_or(50);
    let r = resolve(common, &settings, Emit::Json)?;
    let source = open_source(&r.cache)?;
    let parts = traces
        .iter()
        .map(|&t| {
            if t.fract() != 0.0 || t < 1.0 {
                return Err(Failure::Usage(format!(
                    "--traces entries are shell counts, got {t}"
                )));
            }
            Ok(Partition::new(t as usize, r.params.sites)?)
        })
        .collect::<Outcome<Vec<_>>>()?;
    let summary_report = majorization_report(&r.params, &parts, k_max, &r.cfg, source.as_ref())?;
    let json = json_text(&round_json(
        serde_json::to_value(&summary_report).map_err(|e| Error::Parse(e.to_string()))?,
    ));
    let mut csv = String::from(
        "majorizing,majorized,holds,robust,worst_margin,worst_relative_margin,deficit_bound\n",
    );
    for c in &summary_report.comparisons {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            c.majorizing,
            c.majorized,
            c.holds(),
            c.robust(),
            fmt12(c.report.worst_margin()),
            fmt12(c.worst_relative_margin()),
            fmt12(c.deficit_bound)
        );
    }
    let stdout = emit(r.emit, &r.out, Some(csv), Some(json))?;
    Ok(Report {
        stdout,
        summary: format!(
            "majorization: {} comparisons, all hold = {}, all robust = {}",
            summary_report.comparisons.len(),
            summary_report.all_hold(),
            summary_report.all_robust()
        ),
        ok: summary_report.all_hold(),
    })
}

fn cmd_selftest(emit_flag: Option<String>, out: Option<PathBuf>) -> Outcome<Report> {
    let checks = run_selftest();
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(
            text,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let ok = checks.iter().all(|c| c.passed);
    let mode = match emit_flag.as_deref() {
        None => None,
        Some("json") => Some(Emit::Json),
        Some(other) => {
            return Err(Failure::Usage(format!(
                "selftest emits json only, got `{other}`"
            )))
        }
    };
    let stdout = match mode {
        Some(m) => emit(
            m,
            &out,
            None,
            Some(json_text(
                &serde_json::to_value(&checks).map_err(|e| Error::Parse(e.to_string()))?,
            )),
        )?,
        None => text,
    };
    let passed = checks.iter().filter(|c| c.passed).count();
    Ok(Report {
        stdout,
        summary: format!("selftest: {passed}/{} passed", checks.len()),
        ok,
    })
}

/// Rounds every float in a JSON tree to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .map(|x| json!(round12(x)))
            .unwrap_or(Value::Number(n)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Entropy { common, trace } => cmd_entropy(common, trace),
        Command::Sweep {
            common,
            axis,
            trace_range,
            values,
        } => cmd_sweep(common, axis, trace_range, values),
        Command::Fit {
            from,
            exponent,
            out,
        } => cmd_fit(from, exponent, out),
        Command::Rg {
            common,
            masses,
            trace,
            k_max,
        } => cmd_rg(common, masses, trace, k_max),
        Command::Majorization {
            common,
            traces,
            k_max,
        } => cmd_majorization(common, traces, k_max),
        Command::Selftest { emit, out } => cmd_selftest(emit, out),
    };
    match outcome {
        Ok(report) => {
            print!("{}", report.stdout);
            if report.stdout.is_empty() {
                println!("{}", report.summary);
            } else {
                eprintln!("{}", report.summary);
            }
            if report.ok {
                0
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error [{}]: {e}", e.category());
            exit_code(&e)
        }
    }
}
