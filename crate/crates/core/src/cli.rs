//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure or I/O error, 2 invalid
//! input, 3 no certified witness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bloch::{state_from_value, StateLiteral};
use crate::channels::{
    channel_from_value, dephasing, depolarizing, parse_channel, Channel, PauliDampingChannel,
    RandomUnitaryChannel,
};
use crate::criteria::{
    conjecture1_scan, depol_threshold_fnn, depol_threshold_linear, depol_threshold_star, Evaluator,
    ScanConfig, Status, TheoremId, Verdict,
};
use crate::error::Error;
use crate::network::{NetworkScenario, Topology, UsagePattern};
use crate::oracle::checks::{
    bloch_kraus_suite, bound_vs_correlators, eig_formula_suite, soundness_sweep_for, SoundnessConfig,
    SWEPT,
};
use crate::oracle::witness::{witness_phi_minus, witness_phi_plus, ImproperCase, WitnessReport};
use crate::oracle::VerificationReport;
use crate::tolerance::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "netnl", version, about = "Classify qubit channels as breaking or preserving detectable network nonlocality")]
pub struct Cli {
    /// Comparison tolerance (overrides NETNL_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// JSON file whose keys mirror the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PatternArgs {
    /// Number of sources.
    #[arg(long)]
    pub n: Option<usize>,
    /// Total channel uses.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sources hit on one side.
    #[arg(long)]
    pub m1: Option<usize>,
    /// Sources hit on both sides.
    #[arg(long)]
    pub m2: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every applicable criterion for a channel.
    Classify {
        /// Preset (`depolarizing:0.4`, `pauli-damping:t,l1,l3`, ...) or JSON literal.
        #[arg(long)]
        channel: Option<String>,
        /// linear, star or fnn3.
        #[arg(long)]
        topology: Option<String>,
        #[command(flatten)]
        pattern: PatternArgs,
    },
    /// Depolarizing strength above which breaking is certified.
    Threshold {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evaluate a criterion over a parameter grid (CSV by default).
    Sweep {
        /// thm1 .. thm9
        #[arg(long)]
        criterion: Option<String>,
        /// Axes as `name=start:stop:step` or `name=value`, comma separated.
        #[arg(long)]
        grid: Option<String>,
        /// Fixed parameters as `name=value`, comma separated.
        #[arg(long)]
        fixed: Option<String>,
        #[command(flatten)]
        pattern: PatternArgs,
    },
    /// Build the Bell-state witness that certifies preservation.
    Witness {
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        topology: Option<String>,
        #[command(flatten)]
        pattern: PatternArgs,
    },
    /// Run a verification suite.
    Verify {
        /// bloch-kraus, eig-formulas, bound-vs-correlators, soundness, conjecture1
        suite: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Chain length for bound-vs-correlators (default: 2 and 3).
        #[arg(long)]
        n: Option<usize>,
        /// Channels per criterion for the soundness suite.
        #[arg(long)]
        channels: Option<usize>,
        /// Grid spacing for conjecture1.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Fix the shift `t` in conjecture1.
        #[arg(long)]
        fix_t: Option<f64>,
        /// Criteria for the soundness suite, comma separated (default thm1,thm3,thm4,thm6).
        #[arg(long)]
        criteria: Option<String>,
    },
    /// Network bound of a scenario file `{"topology": .., "states": [..]}`.
    Bound {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        topology: Option<String>,
    },
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub channel: Option<Value>,
    pub topology: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub grid: Option<String>,
    pub fixed: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub family: Option<String>,
    pub criterion: Option<String>,
    pub suite: Option<String>,
    pub scenario: Option<PathBuf>,
    pub channels: Option<usize>,
    pub grid_step: Option<f64>,
    pub fix_t: Option<f64>,
    pub criteria: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Input(Error),
    NoWitness(String),
    /// Suite ran but failed; carries the report text.
    VerifyFailed(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::NoWitness(_) => 3,
            CliError::VerifyFailed(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "error: {e}"),
            CliError::NoWitness(m) => write!(f, "no certified witness: {m}"),
            CliError::VerifyFailed(_) => write!(f, "verification failed"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(Error::Parse(msg.into()))
}

fn load_config(path: &Option<PathBuf>) -> CliResult<ConfigFile> {
    let Some(p) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(p)
        .map_err(|e| input_err(format!("config {}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("config {}: {e}", p.display())))
}

fn channel_arg(flag: &Option<String>, cfg: &ConfigFile, tol: &Tolerances) -> CliResult<Channel> {
    if let Some(s) = flag {
        return Ok(parse_channel(s, tol)?);
    }
    match &cfg.channel {
        Some(v) => Ok(channel_from_value(v, tol)?),
        None => Err(input_err("missing --channel")),
    }
}

fn topology_arg(flag: &Option<String>, cfg: &ConfigFile) -> CliResult<Topology> {
    let s = flag
        .clone()
        .or_else(|| cfg.topology.clone())
        .ok_or_else(|| input_err("missing --topology"))?;
    Ok(Topology::parse(&s)?)
}

fn merge_pattern(p: &PatternArgs, cfg: &ConfigFile) -> PatternArgs {
    PatternArgs {
        n: p.n.or(cfg.n),
        k: p.k.or(cfg.k),
        m1: p.m1.or(cfg.m1),
        m2: p.m2.or(cfg.m2),
    }
}

/// Pattern from `k` or `(m1, m2)`; `n` defaults to 3 for the trilocal star
/// and to the fewest sources that fit for the chain.
pub fn resolve_pattern(topology: Topology, p: &PatternArgs) -> Result<UsagePattern, Error> {
    let (m1, m2) = match (p.m1, p.m2, p.k) {
        (None, None, None) => {
            return Err(Error::PatternMismatch("give --k or --m1/--m2".into()));
        }
        (None, None, Some(k)) => (k % 2, k / 2),
        (m1, m2, k) => {
            let (m1, m2) = (m1.unwrap_or(0), m2.unwrap_or(0));
            if let Some(k) = k {
                if k != m1 + 2 * m2 {
                    return Err(Error::PatternMismatch(format!(
                        "k = {k} but m1 + 2 m2 = {}",
                        m1 + 2 * m2
                    )));
                }
            }
            (m1, m2)
        }
    };
    if m1 + 2 * m2 == 0 {
        return Err(Error::PatternMismatch("k = 0 uses certify nothing".into()));
    }
    let n = match (topology, p.n) {
        (Topology::StarFnn3, Some(n)) if n != 3 => {
            return Err(Error::Topology(format!("the trilocal star has n = 3, got {n}")));
        }
        (Topology::StarFnn3, _) => 3,
        (_, Some(n)) => n,
        (Topology::Linear, None) => (m1 + m2).max(1),
        (Topology::Star, None) => {
            return Err(Error::PatternMismatch("star network needs --n".into()));
        }
    };
    UsagePattern::canonical(n, m1, m2)
}

/// Every criterion that applies to the channel class and topology.
pub fn classify(
    ev: &Evaluator,
    ch: &Channel,
    topology: Topology,
    u: &UsagePattern,
) -> Result<Vec<Verdict>, Error> {
    let (n, k, m1, m2) = (u.n(), u.k(), u.m1(), u.m2());
    match (ch, topology) {
        (Channel::Unital(c), Topology::Linear) => {
            Ok(vec![ev.thm1_unital_linear(c, k)?, ev.thm2_unital_preserving(c, u)?])
        }
        (Channel::Unital(c), Topology::Star) => Ok(vec![
            ev.thm4_unital_star(c, k, n)?,
            ev.thm5_unital_preserving_star(c, u)?,
        ]),
        (Channel::Unital(c), Topology::StarFnn3) => Ok(vec![ev.thm8_unital_fnn(c, k)?]),
        (Channel::Damping(c), Topology::Linear) => Ok(vec![ev.thm3_nonunital_linear(c)?]),
        (Channel::Damping(c), Topology::Star) => Ok(vec![
            ev.thm6_nonunital_star(c, m1, m2, n)?,
            ev.thm7_nonunital_preserving_star(c, m1, m2, n)?,
        ]),
        (Channel::Damping(c), Topology::StarFnn3) => Ok(vec![ev.thm9_nonunital_fnn(c, m1, m2)?]),
        (Channel::Affine(_), _) => Err(Error::InvalidChannel(
            "no criterion covers a general affine channel; use a random-unitary or pauli-damping channel".into(),
        )),
    }
}

#[derive(Debug, Serialize)]
struct PatternOut {
    n: usize,
    k: usize,
    m1: usize,
    m2: usize,
}

impl From<&UsagePattern> for PatternOut {
    fn from(u: &UsagePattern) -> Self {
        Self {
            n: u.n(),
            k: u.k(),
            m1: u.m1(),
            m2: u.m2(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ClassifyOut {
    topology: Topology,
    pattern: PatternOut,
    verdicts: Vec<Verdict>,
}

#[derive(Debug, Serialize)]
struct ThresholdOut {
    family: String,
    topology: Topology,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    threshold: f64,
    all_q_certified: bool,
}

/// Smallest certified depolarizing strength for a topology.
pub fn threshold(family: &str, topology: Topology, k: usize, n: Option<usize>) -> Result<f64, Error> {
    if family != "depolarizing" {
        return Err(Error::Parse(format!(
            "thresholds exist for the depolarizing family only, got `{family}`"
        )));
    }
    match topology {
        Topology::Linear => depol_threshold_linear(k),
        Topology::Star => {
            let n = n.ok_or_else(|| Error::PatternMismatch("star threshold needs --n".into()))?;
            depol_threshold_star(k, n)
        }
        Topology::StarFnn3 => depol_threshold_fnn(k),
    }
}

// ---------------------------------------------------------------- sweep

pub const SWEEP_HEADER: &str = "criterion,q,p,t,l1,l3,k,n,m1,m2,lhs,rhs,margin,valid,verdict";
const REAL_AXES: [&str; 5] = ["q", "p", "t", "l1", "l3"];
const INT_AXES: [&str; 4] = ["k", "n", "m1", "m2"];

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

fn check_axis_name(name: &str) -> Result<(), Error> {
    if REAL_AXES.contains(&name) || INT_AXES.contains(&name) {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "unknown grid axis `{name}` (expected one of q, p, t, l1, l3, k, n, m1, m2)"
        )))
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64, Error> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what}: `{s}` is not finite")));
    }
    Ok(v)
}

fn check_int(name: &str, v: f64) -> Result<(), Error> {
    if INT_AXES.contains(&name) && (v < 0.0 || v.fract() != 0.0) {
        return Err(Error::Parse(format!("{name} must be a non-negative integer, got {v}")));
    }
    Ok(())
}

/// `t=0:1:0.02,l1=0:1:0.02` (inclusive stop) or `k=3`.
pub fn parse_grid(text: &str) -> Result<Vec<GridAxis>, Error> {
    let mut axes: Vec<GridAxis> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, range) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("grid axis `{part}` needs name=start:stop:step")))?;
        let name = name.trim();
        check_axis_name(name)?;
        if axes.iter().any(|a| a.name == name) {
            return Err(Error::Parse(format!("grid axis `{name}` given twice")));
        }
        let nums: Vec<&str> = range.split(':').collect();
        let values = match nums.as_slice() {
            [v] => vec![parse_num(v, name)?],
            [a, b, s] => {
                let (start, stop, step) = (parse_num(a, name)?, parse_num(b, name)?, parse_num(s, name)?);
                if step <= 0.0 {
                    return Err(Error::Parse(format!("grid axis `{name}`: step must be > 0")));
                }
                if stop < start {
                    return Err(Error::Parse(format!("grid axis `{name}`: stop < start")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
            _ => {
                return Err(Error::Parse(format!(
                    "grid axis `{name}`: expected start:stop:step or a single value"
                )))
            }
        };
        for v in &values {
            check_int(name, *v)?;
        }
        axes.push(GridAxis {
            name: name.to_string(),
            values,
        });
    }
    if axes.is_empty() {
        return Err(Error::Parse("empty grid".into()));
    }
    Ok(axes)
}

/// `n=4,m1=2,m2=1`
pub fn parse_fixed(text: &str) -> Result<BTreeMap<String, f64>, Error> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("fixed parameter `{part}` needs name=value")))?;
        let name = name.trim();
        check_axis_name(name)?;
        let v = parse_num(v, name)?;
        check_int(name, v)?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub criterion: TheoremId,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub t: Option<f64>,
    pub l1: Option<f64>,
    pub l3: Option<f64>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub margin: Option<f64>,
    pub valid: bool,
    pub verdict: &'static str,
}

fn is_unital_criterion(t: TheoremId) -> bool {
    matches!(
        t,
        TheoremId::Thm1 | TheoremId::Thm2 | TheoremId::Thm4 | TheoremId::Thm5 | TheoremId::Thm8
    )
}

/// Parameters each criterion needs besides the channel.
fn required_ints(t: TheoremId) -> &'static [&'static str] {
    match t {
        TheoremId::Thm1 | TheoremId::Thm2 | TheoremId::Thm8 => &["k"],
        TheoremId::Thm4 | TheoremId::Thm5 => &["k", "n"],
        TheoremId::Thm3 => &[],
        TheoremId::Thm6 | TheoremId::Thm7 => &["m1", "m2", "n"],
        TheoremId::Thm9 => &["m1", "m2"],
    }
}

fn check_sweep_inputs(t: TheoremId, names: &[String]) -> Result<(), Error> {
    let has = |s: &str| names.iter().any(|n| n == s);
    if is_unital_criterion(t) {
        match (has("q"), has("p")) {
            (true, true) => return Err(Error::Parse("give either q or p, not both".into())),
            (false, false) => {
                return Err(Error::Parse(format!(
                    "{} needs a depolarizing q or dephasing p parameter",
                    t.name()
                )))
            }
            _ => {}
        }
    } else {
        for s in ["t", "l1", "l3"] {
            if !has(s) {
                return Err(Error::Parse(format!("{} needs parameter {s}", t.name())));
            }
        }
    }
    for s in required_ints(t) {
        if !has(s) {
            return Err(Error::Parse(format!("{} needs parameter {s}", t.name())));
        }
    }
    Ok(())
}

fn eval_point(ev: &Evaluator, crit: TheoremId, p: &BTreeMap<&str, f64>) -> Result<Verdict, Error> {
    let int = |s: &str| p.get(s).map(|v| *v as usize);
    let need = |s: &str| int(s).ok_or_else(|| Error::Parse(format!("missing {s}")));
    let unital = || -> Result<RandomUnitaryChannel, Error> {
        match (p.get("q"), p.get("p")) {
            (Some(q), _) => depolarizing(*q),
            (_, Some(pp)) => dephasing(*pp),
            _ => Err(Error::Parse("missing q or p".into())),
        }
    };
    let damping = || -> Result<PauliDampingChannel, Error> {
        PauliDampingChannel::new(p["t"], p["l1"], p["l3"], &ev.tol)
    };
    match crit {
        TheoremId::Thm1 => ev.thm1_unital_linear(&unital()?, need("k")?),
        TheoremId::Thm2 => {
            let k = need("k")?;
            let n = int("n").unwrap_or(k.div_ceil(2).max(1));
            ev.thm2_unital_preserving(&unital()?, &UsagePattern::from_k(n, k)?)
        }
        TheoremId::Thm4 => ev.thm4_unital_star(&unital()?, need("k")?, need("n")?),
        TheoremId::Thm5 => {
            ev.thm5_unital_preserving_star(&unital()?, &UsagePattern::from_k(need("n")?, need("k")?)?)
        }
        TheoremId::Thm8 => ev.thm8_unital_fnn(&unital()?, need("k")?),
        TheoremId::Thm3 => ev.thm3_nonunital_linear(&damping()?),
        TheoremId::Thm6 => ev.thm6_nonunital_star(&damping()?, need("m1")?, need("m2")?, need("n")?),
        TheoremId::Thm7 => {
            ev.thm7_nonunital_preserving_star(&damping()?, need("m1")?, need("m2")?, need("n")?)
        }
        TheoremId::Thm9 => ev.thm9_nonunital_fnn(&damping()?, need("m1")?, need("m2")?),
    }
}

/// Evaluates `crit` at every grid point, first axis slowest. Points where
/// the channel or pattern is inadmissible get `valid = false`.
pub fn sweep(
    ev: &Evaluator,
    crit: TheoremId,
    axes: &[GridAxis],
    fixed: &BTreeMap<String, f64>,
) -> Result<Vec<SweepRow>, Error> {
    let mut names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    for k in fixed.keys() {
        if names.contains(k) {
            return Err(Error::Parse(format!("`{k}` is both a grid axis and fixed")));
        }
        names.push(k.clone());
    }
    check_sweep_inputs(crit, &names)?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let rows = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut point: BTreeMap<&str, f64> = fixed.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            for a in axes.iter().rev() {
                point.insert(a.name.as_str(), a.values[idx % a.values.len()]);
                idx /= a.values.len();
            }
            let r = |s: &str| point.get(s).copied();
            let i = |s: &str| point.get(s).map(|v| *v as usize);
            let (lhs, rhs, margin, valid, verdict) = match eval_point(ev, crit, &point) {
                Ok(v) => (Some(v.lhs), Some(v.rhs), Some(v.margin), true, v.status.short()),
                Err(_) => (None, None, None, false, Status::Inconclusive.short()),
            };
            SweepRow {
                criterion: crit,
                q: r("q"),
                p: r("p"),
                t: r("t"),
                l1: r("l1"),
                l3: r("l3"),
                k: i("k"),
                n: i("n"),
                m1: i("m1"),
                m2: i("m2"),
                lhs,
                rhs,
                margin,
                valid,
                verdict,
            }
        })
        .collect();
    Ok(rows)
}

/// 17 significant digits.
fn real(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 160);
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.criterion.name(),
            real(r.q),
            real(r.p),
            real(r.t),
            real(r.l1),
            real(r.l3),
            int(r.k),
            int(r.n),
            int(r.m1),
            int(r.m2),
            real(r.lhs),
            real(r.rhs),
            real(r.margin),
            r.valid,
            r.verdict
        );
    }
    s
}

// -------------------------------------------------------------- witness

#[derive(Debug, Serialize)]
struct WitnessOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem: Option<TheoremId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<usize>,
    input_state: &'static str,
    topology: Topology,
    pattern: PatternOut,
    input: Vec<StateLiteral>,
    transformed: Vec<StateLiteral>,
    closed_form_bound: f64,
    simulated_bound: f64,
    threshold: f64,
}

fn literals(s: &NetworkScenario) -> Vec<StateLiteral> {
    s.states().iter().map(|x| x.to_literal()).collect()
}

fn witness_out(theorem: Option<TheoremId>, case: Option<usize>, w: &WitnessReport) -> WitnessOut {
    WitnessOut {
        theorem,
        case,
        input_state: w.input_label,
        topology: w.input.topology(),
        pattern: (&w.pattern).into(),
        input: literals(&w.input),
        transformed: literals(&w.transformed),
        closed_form_bound: w.closed_form,
        simulated_bound: w.direct.bound,
        threshold: w.threshold(),
    }
}

fn build_witness(tol: &Tolerances, ch: &Channel, topology: Topology, u: &UsagePattern) -> CliResult<WitnessOut> {
    let out = match ch {
        Channel::Unital(c) => {
            let case = ImproperCase::detect(c, tol).ok_or_else(|| {
                CliError::NoWitness("alpha and beta are both proper and nonzero".into())
            })?;
            let w = witness_phi_minus(c, topology, u, case, tol)?;
            let theorem = match topology {
                Topology::Linear => Some(TheoremId::Thm2),
                Topology::Star => Some(TheoremId::Thm5),
                Topology::StarFnn3 => None,
            };
            (w, theorem, Some(case.id()))
        }
        Channel::Damping(c) if topology == Topology::Star => {
            let w = witness_phi_plus(c, u.n(), u.m1(), u.m2(), tol)?;
            (w, Some(TheoremId::Thm7), None)
        }
        Channel::Damping(_) => {
            return Err(CliError::NoWitness(format!(
                "no witness construction for the damping class on the {} topology",
                topology.name()
            )))
        }
        Channel::Affine(_) => {
            return Err(CliError::NoWitness("no witness construction for general affine channels".into()))
        }
    };
    let (w, theorem, case) = out;
    if !w.certifies() {
        return Err(CliError::NoWitness(format!(
            "witness bound {} does not exceed the threshold {} by the required margin",
            w.direct.bound,
            w.threshold()
        )));
    }
    Ok(witness_out(theorem, case, &w))
}

// --------------------------------------------------------------- verify

fn combine(check: &str, seed: u64, reports: Vec<VerificationReport>) -> VerificationReport {
    VerificationReport {
        check: check.into(),
        samples: reports.iter().map(|r| r.samples).sum(),
        max_deviation: reports.iter().map(|r| r.max_deviation).fold(f64::NEG_INFINITY, f64::max),
        pass: reports.iter().all(|r| r.pass),
        seed,
        notes: reports
            .into_iter()
            .flat_map(|r| {
                let c = r.check;
                r.notes.into_iter().map(move |n| format!("{c}: {n}"))
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    tol: &Tolerances,
    suite: &str,
    samples: Option<usize>,
    seed: u64,
    n: Option<usize>,
    channels: Option<usize>,
    grid_step: Option<f64>,
    fix_t: Option<f64>,
    criteria: Option<&str>,
) -> CliResult<VerificationReport> {
    Ok(match suite {
        "bloch-kraus" => bloch_kraus_suite(samples.unwrap_or(1000), seed),
        "eig-formulas" => eig_formula_suite(samples.unwrap_or(1000), seed),
        "bound-vs-correlators" => {
            let ns = match n {
                Some(n) => vec![n],
                None => vec![2, 3],
            };
            let reports = ns
                .into_iter()
                .map(|n| bound_vs_correlators(n, samples.unwrap_or(1000), seed))
                .collect::<Result<Vec<_>, _>>()?;
            combine("bound-vs-correlators", seed, reports)
        }
        "soundness" => {
            let cfg = SoundnessConfig {
                channels_per_theorem: channels.unwrap_or(50),
                scenarios: samples.unwrap_or(10_000),
                seed,
                ..SoundnessConfig::default()
            };
            let theorems = match criteria {
                Some(list) => list
                    .split(',')
                    .map(|s| TheoremId::parse(s.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => SWEPT.to_vec(),
            };
            if let Some(t) = theorems
                .iter()
                .find(|t| matches!(t, TheoremId::Thm2 | TheoremId::Thm5 | TheoremId::Thm7))
            {
                return Err(input_err(format!(
                    "{} certifies preservation; the soundness suite checks breaking criteria",
                    t.name()
                )));
            }
            soundness_sweep_for(&theorems, &cfg)?.to_verification()
        }
        "conjecture1" => {
            let cfg = ScanConfig {
                grid_step,
                samples: samples.unwrap_or(100_000),
                seed,
                fix_t,
            };
            let r = conjecture1_scan(&cfg, tol)?;
            let mut notes = vec![format!(
                "grid points {}, random samples {}, violations {}, min margin {:e} at (t, l1, l3) = {:?}",
                r.grid_points, r.random_samples, r.violations, r.min_margin, r.min_margin_at
            )];
            notes.extend(r.first_violations.iter().map(|p| format!("violation at {p:?}")));
            VerificationReport {
                check: "conjecture1".into(),
                samples: r.grid_points + r.random_samples,
                max_deviation: -r.min_margin,
                pass: r.violations == 0,
                seed,
                notes,
            }
        }
        other => {
            return Err(input_err(format!(
                "unknown suite `{other}` (bloch-kraus, eig-formulas, bound-vs-correlators, soundness, conjecture1)"
            )))
        }
    })
}

// ---------------------------------------------------------------- bound

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    topology: Option<String>,
    states: Vec<Value>,
}

fn load_scenario(path: &Path, topology: Option<Topology>) -> CliResult<NetworkScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("scenario {}: {e}", path.display())))?;
    let f: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("scenario {}: {e}", path.display())))?;
    let topology = match (topology, &f.topology) {
        (Some(t), _) => t,
        (None, Some(s)) => Topology::parse(s)?,
        (None, None) => return Err(input_err("scenario needs a topology")),
    };
    let states = f.states.iter().map(state_from_value).collect::<Result<Vec<_>, _>>()?;
    Ok(NetworkScenario::new(topology, states)?)
}

// ------------------------------------------------------------------ run

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

/// Runs a parsed command and returns the text to emit.
pub fn run(cli: &Cli) -> CliResult<String> {
    let cfg = load_config(&cli.config)?;
    let mut tol = Tolerances::from_env();
    if let Some(t) = cli.tol.or(cfg.tol) {
        if !(t.is_finite() && t >= 0.0) {
            return Err(input_err(format!("--tol must be a non-negative number, got {t}")));
        }
        tol = tol.with_eq(t);
    }
    let ev = Evaluator::new(tol);
    let format = cli.format.or(cfg.format);
    match &cli.command {
        Command::Classify {
            channel,
            topology,
            pattern,
        } => {
            let ch = channel_arg(channel, &cfg, &tol)?;
            let topology = topology_arg(topology, &cfg)?;
            let u = resolve_pattern(topology, &merge_pattern(pattern, &cfg))?;
            let verdicts = classify(&ev, &ch, topology, &u)?;
            Ok(json(&ClassifyOut {
                topology,
                pattern: (&u).into(),
                verdicts,
            }))
        }
        Command::Threshold { family, topology, k, n } => {
            let family = family
                .clone()
                .or_else(|| cfg.family.clone())
                .unwrap_or_else(|| "depolarizing".into());
            let topology = topology_arg(topology, &cfg)?;
            let k = k.or(cfg.k).ok_or_else(|| input_err("missing --k"))?;
            let n = n.or(cfg.n);
            let v = threshold(&family, topology, k, n)?;
            let all = v < 0.0;
            match format.unwrap_or(Format::Text) {
                Format::Json => Ok(json(&ThresholdOut {
                    family,
                    topology,
                    k,
                    n,
                    threshold: v,
                    all_q_certified: all,
                })),
                _ if all => Ok(format!("{v} (negative: all q certified)\n")),
                _ => Ok(format!("{v}\n")),
            }
        }
        Command::Sweep {
            criterion,
            grid,
            fixed,
            pattern,
        } => {
            let crit = criterion
                .clone()
                .or_else(|| cfg.criterion.clone())
                .ok_or_else(|| input_err("missing --criterion"))?;
            let crit = TheoremId::parse(&crit)?;
            let grid = grid
                .clone()
                .or_else(|| cfg.grid.clone())
                .ok_or_else(|| input_err("missing --grid"))?;
            let axes = parse_grid(&grid)?;
            let mut fixed_map = match fixed.clone().or_else(|| cfg.fixed.clone()) {
                Some(s) => parse_fixed(&s)?,
                None => BTreeMap::new(),
            };
            let p = merge_pattern(pattern, &cfg);
            for (name, v) in [("n", p.n), ("k", p.k), ("m1", p.m1), ("m2", p.m2)] {
                if let Some(v) = v {
                    fixed_map.entry(name.to_string()).or_insert(v as f64);
                }
            }
            let rows = sweep(&ev, crit, &axes, &fixed_map)?;
            match format.unwrap_or(Format::Csv) {
                Format::Json => Ok(json(&rows)),
                _ => Ok(rows_to_csv(&rows)),
            }
        }
        Command::Witness {
            channel,
            topology,
            pattern,
        } => {
            let ch = channel_arg(channel, &cfg, &tol)?;
            let topology = topology_arg(topology, &cfg)?;
            let u = resolve_pattern(topology, &merge_pattern(pattern, &cfg))?;
            Ok(json(&build_witness(&tol, &ch, topology, &u)?))
        }
        Command::Verify {
            suite,
            samples,
            seed,
            n,
            channels,
            grid_step,
            fix_t,
            criteria,
        } => {
            let suite = suite
                .clone()
                .or_else(|| cfg.suite.clone())
                .ok_or_else(|| input_err("missing suite"))?;
            let seed = seed
                .or(cfg.seed)
                .ok_or_else(|| input_err("randomized suites need an explicit --seed"))?;
            let report = run_verify(
                &tol,
                &suite,
                samples.or(cfg.samples),
                seed,
                n.or(cfg.n),
                channels.or(cfg.channels),
                grid_step.or(cfg.grid_step),
                fix_t.or(cfg.fix_t),
                criteria.clone().or_else(|| cfg.criteria.clone()).as_deref(),
            )?;
            let text = json(&report);
            if report.pass {
                Ok(text)
            } else {
                Err(CliError::VerifyFailed(text))
            }
        }
        Command::Bound { scenario, topology } => {
            let path = scenario
                .clone()
                .or_else(|| cfg.scenario.clone())
                .ok_or_else(|| input_err("missing --scenario"))?;
            let topology = match topology.clone().or_else(|| cfg.topology.clone()) {
                Some(s) => Some(Topology::parse(&s)?),
                None => None,
            };
            let sc = load_scenario(&path, topology)?;
            Ok(json(&sc.bound()?))
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()
        }
    }
}

/// Parses `args`, runs, writes output and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| load_config(&cli.config).ok().and_then(|c| c.out));
    match run(&cli) {
        Ok(text) => match emit(&text, out.as_deref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("i/o error: {e}");
                1
            }
        },
        Err(CliError::VerifyFailed(text)) => {
            let _ = emit(&text, out.as_deref());
            eprintln!("verification failed");
            1
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
