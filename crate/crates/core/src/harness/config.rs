//! Experiment configuration files.
//!
//! UTF-8 text with `[problem]`, `[method]` and `[run]` sections holding
//! `key = value` lines. `#` starts a comment. Lists are comma-separated.
//! Method keys accept a `.<method>` suffix that overrides the plain key for
//! that method only, e.g. `gamma.zo-rf = 1e-4`.
//!
//! ```text
//! [problem]
//! type = matgame        # matgame | quadratic | file
//! n = 50                # columns of C, dimension of x
//! k = 50                # rows of C, dimension of y
//! seed = 1
//! noise = 0.05          # sigma relative to mean |phi| near z0; or `sigma = ...`
//!
//! [method]
//! methods = zo-std, zo-rf, zo-ker, fo
//! gamma = 0.05
//! tau = 0.01
//!
//! [run]
//! n_iters = 20000
//! seeds = 1, 2, 3, 4, 5
//! log_every = 100
//! output_dir = out
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::GeometryKind;
use crate::oracle::XiDistribution;
use crate::problems::Normalization;
use crate::solvers::ScheduleCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ZoStd,
    ZoRf,
    ZoKer,
    Fo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ZoStd, Method::ZoRf, Method::ZoKer, Method::Fo];

    pub fn name(self) -> &'static str {
        match self {
            Self::ZoStd => "zo-std",
            Self::ZoRf => "zo-rf",
            Self::ZoKer => "zo-ker",
            Self::Fo => "fo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (zo-std, zo-rf, zo-ker, fo)")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraticDomain {
    Ball,
    Box,
    Whole,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    MatGame { n: usize, k: usize, normalization: Normalization },
    MatrixFile { path: PathBuf },
    Quadratic {
        nx: usize,
        ny: usize,
        mu: f64,
        l: f64,
        domain: QuadraticDomain,
        radius: f64,
        /// Every coordinate of the saddle point.
        shift: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// Multiple of the mean `|phi|` near the start.
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub seed: u64,
    pub noise: NoiseLevel,
    pub xi: XiDistribution,
    /// Bound of the deterministic sign-pattern bias.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleChoice {
    Constant,
    Derived(ScheduleCase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// `None` picks entropy on simplex pairs for zo-std and fo, Euclidean
    /// otherwise.
    pub geometry: Option<GeometryKind>,
    pub schedule: ScheduleChoice,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub gamma_mult: f64,
    pub tau_mult: f64,
    /// Kernel order for zo-ker.
    pub beta: f64,
    /// Strong convexity modulus used by the schedule, overriding the problem's.
    pub mu: Option<f64>,
    /// Regularize with this modulus around the start before running.
    pub regularize: Option<f64>,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            geometry: None,
            schedule: ScheduleChoice::Constant,
            gamma: None,
            tau: None,
            gamma_mult: 1.0,
            tau_mult: 1.0,
            beta: 3.0,
            mu: None,
            regularize: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_iters: usize,
    pub seeds: Vec<u64>,
    pub log_every: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub methods: Vec<MethodConfig>,
    pub run: RunConfig,
    /// Normalized `key=value` listing per section, echoed into log headers.
    echo: Vec<(String, String)>,
}

const PROBLEM_KEYS: &[&str] = &[
    "type", "n", "k", "nx", "ny", "mu", "L", "seed", "noise", "sigma", "xi", "delta",
    "normalization", "matrix_file", "domain", "radius", "shift",
];
const METHOD_KEYS: &[&str] = &[
    "geometry", "schedule", "gamma", "tau", "gamma_mult", "tau_mult", "beta", "mu", "regularize",
];
const RUN_KEYS: &[&str] = &["n_iters", "seeds", "log_every", "output_dir", "threads"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line: line_no, msg: "unterminated section header".into() })?
                .trim();
            if !matches!(name, "problem" | "method" | "run") {
                return Err(Error::Parse { line: line_no, msg: format!("unknown section [{name}]") });
            }
            if sections.contains_key(name) {
                return Err(Error::Parse { line: line_no, msg: format!("section [{name}] repeated") });
            }
            sections.insert(name.to_string(), Section::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected `key = value`, got `{line}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("key `{key}` outside a section") })?;
        let table = sections.get_mut(section).expect("section registered");
        if table.contains_key(key) {
            return Err(Error::Parse { line: line_no, msg: format!("key `{key}` repeated in [{section}]") });
        }
        table.insert(key.to_string(), Entry { value: value.to_string(), line: line_no });
    }
    Ok(sections)
}

struct Reader<'a> {
    name: &'static str,
    section: &'a Section,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.section.get(key)
    }

    fn bad(&self, key: &str, entry: &Entry, why: impl fmt::Display) -> Error {
        Error::Config(format!("[{}] `{key}` (line {}): {why}", self.name, entry.line))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| self.bad(key, e, err)),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("[{}] missing key `{key}`", self.name)))
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key)?;
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(self.bad(key, self.raw(key).expect("present"), format!("must be positive, got {x}")))
            }
            other => Ok(other),
        }
    }

    fn nonnegative(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key)?;
        match v {
            Some(x) if !(x >= 0.0 && x.is_finite()) => {
                Err(self.bad(key, self.raw(key).expect("present"), format!("must be nonnegative, got {x}")))
            }
            other => Ok(other),
        }
    }

    fn dim(&self, key: &str) -> Result<usize> {
        let v: usize = self.require(key)?;
        if v == 0 {
            return Err(self.bad(key, self.raw(key).expect("present"), "must be >= 1"));
        }
        Ok(v)
    }

    fn wrap<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match self.raw(key) {
            Some(entry) => self.bad(key, entry, e),
            None => e,
        })
    }
}

fn check_keys(name: &str, section: &Section, allowed: &[&str], suffixed: bool) -> Result<()> {
    for (key, entry) in section {
        let base = if suffixed {
            match key.split_once('.') {
                Some((b, m)) => {
                    Method::parse(m).map_err(|e| Error::Config(format!("[{name}] `{key}` (line {}): {e}", entry.line)))?;
                    b
                }
                None => key.as_str(),
            }
        } else {
            key.as_str()
        };
        let ok = allowed.contains(&base) || (name == "method" && key == "methods");
        if !ok {
            return Err(Error::Config(format!("[{name}] unknown key `{key}` (line {})", entry.line)));
        }
    }
    Ok(())
}

fn parse_problem(section: &Section) -> Result<ProblemConfig> {
    let r = Reader { name: "problem", section };
    let kind_name: String = r.require("type")?;
    let normalization = match r.raw("normalization") {
        Some(_) => r.wrap("normalization", Normalization::parse(&r.require::<String>("normalization")?))?,
        None => Normalization::default(),
    };
    let kind = match kind_name.as_str() {
        "matgame" => ProblemKind::MatGame { n: r.dim("n")?, k: r.dim("k")?, normalization },
        "file" => ProblemKind::MatrixFile { path: PathBuf::from(r.require::<String>("matrix_file")?) },
        "quadratic" => {
            let mu = r.positive("mu")?.ok_or_else(|| Error::Config("[problem] missing key `mu`".into()))?;
            let l = r.positive("L")?.ok_or_else(|| Error::Config("[problem] missing key `L`".into()))?;
            if mu > l {
                return Err(Error::Config(format!("[problem] `mu` = {mu} exceeds `L` = {l}")));
            }
            let domain = match r.get::<String>("domain")?.as_deref().unwrap_or("ball") {
                "ball" => QuadraticDomain::Ball,
                "box" => QuadraticDomain::Box,
                "whole" => QuadraticDomain::Whole,
                other => {
                    return Err(r.bad("domain", r.raw("domain").expect("present"), format!("unknown domain `{other}` (ball, box, whole)")))
                }
            };
            ProblemKind::Quadratic {
                nx: r.dim("nx")?,
                ny: r.dim("ny")?,
                mu,
                l,
                domain,
                radius: r.positive("radius")?.unwrap_or(1.0),
                shift: r.get("shift")?.unwrap_or(0.0),
            }
        }
        other => {
            return Err(r.bad("type", r.raw("type").expect("present"), format!("unknown problem type `{other}` (matgame, quadratic, file)")))
        }
    };
    let noise = match (r.nonnegative("noise")?, r.nonnegative("sigma")?) {
        (Some(_), Some(_)) => return Err(Error::Config("[problem] give either `noise` or `sigma`, not both".into())),
        (Some(level), None) => NoiseLevel::Relative(level),
        (None, Some(s)) => NoiseLevel::Absolute(s),
        (None, None) => NoiseLevel::Absolute(0.0),
    };
    let xi = match r.get::<String>("xi")? {
        Some(s) => r.wrap("xi", XiDistribution::parse(&s))?,
        None => XiDistribution::Gaussian,
    };
    Ok(ProblemConfig {
        kind,
        seed: r.get("seed")?.unwrap_or(0),
        noise,
        xi,
        delta: r.nonnegative("delta")?.unwrap_or(0.0),
    })
}

fn parse_list<T: FromStr>(r: &Reader<'_>, key: &str) -> Result<Option<Vec<T>>>
where
    T::Err: fmt::Display,
{
    let Some(entry) = r.raw(key) else { return Ok(None) };
    let items = entry
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| r.bad(key, entry, format!("`{s}`: {e}"))))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(r.bad(key, entry, "empty list"));
    }
    Ok(Some(items))
}

fn parse_method(section: &Section, method: Method) -> Result<MethodConfig> {
    // per-method overrides shadow the shared keys
    let mut merged = Section::new();
    for (key, entry) in section {
        if key.contains('.') || key == "methods" {
            continue;
        }
        merged.insert(key.clone(), entry.clone());
    }
    for (key, entry) in section {
        if let Some((base, m)) = key.split_once('.') {
            if Method::parse(m)? == method {
                merged.insert(base.to_string(), entry.clone());
            }
        }
    }
    let r = Reader { name: "method", section: &merged };
    let mut cfg = MethodConfig::new(method);
    cfg.geometry = match r.get::<String>("geometry")?.as_deref() {
        None => None,
        Some("euclidean") => Some(GeometryKind::Euclidean),
        Some("entropy") => Some(GeometryKind::EntropySimplexPair),
        Some(other) => {
            return Err(r.bad("geometry", r.raw("geometry").expect("present"), format!("unknown geometry `{other}` (euclidean, entropy)")))
        }
    };
    cfg.schedule = match r.get::<String>("schedule")?.as_deref() {
        None | Some("constant") => ScheduleChoice::Constant,
        Some(case) => ScheduleChoice::Derived(r.wrap("schedule", ScheduleCase::parse(case))?),
    };
    cfg.gamma = r.positive("gamma")?;
    cfg.tau = r.positive("tau")?;
    cfg.gamma_mult = r.positive("gamma_mult")?.unwrap_or(1.0);
    cfg.tau_mult = r.positive("tau_mult")?.unwrap_or(1.0);
    cfg.beta = r.positive("beta")?.unwrap_or(3.0);
    cfg.mu = r.positive("mu")?;
    cfg.regularize = r.positive("regularize")?;
    match (method, cfg.geometry) {
        (Method::ZoRf, Some(GeometryKind::EntropySimplexPair)) => {
            return Err(Error::Config("[method] zo-rf requires `geometry = euclidean`".into()))
        }
        (Method::ZoKer, Some(GeometryKind::EntropySimplexPair)) => {
            return Err(Error::Config("[method] zo-ker uses Euclidean projection; drop `geometry = entropy`".into()))
        }
        _ => {}
    }
    if cfg.schedule == ScheduleChoice::Constant {
        if cfg.gamma.is_none() {
            return Err(Error::Config(format!("[method] constant schedule for {method} needs `gamma`")));
        }
        if cfg.tau.is_none() && method != Method::Fo {
            return Err(Error::Config(format!("[method] constant schedule for {method} needs `tau`")));
        }
    }
    if method == Method::ZoKer {
        if let ScheduleChoice::Derived(case) = cfg.schedule {
            if case != ScheduleCase::KernelScsc {
                return Err(Error::Config("[method] zo-ker accepts `schedule = constant` or `kernel_scsc`".into()));
            }
        }
    } else if cfg.schedule == ScheduleChoice::Derived(ScheduleCase::KernelScsc) {
        return Err(Error::Config(format!("[method] `kernel_scsc` applies to zo-ker only, not {method}")));
    }
    Ok(cfg)
}

fn parse_run(section: &Section) -> Result<RunConfig> {
    let r = Reader { name: "run", section };
    let log_every = r.get::<usize>("log_every")?.unwrap_or(1);
    if log_every == 0 {
        return Err(Error::Config("[run] `log_every` must be >= 1".into()));
    }
    let mut seeds: Vec<u64> = parse_list(&r, "seeds")?.unwrap_or_else(|| vec![1]);
    let before = seeds.len();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != before {
        return Err(Error::Config("[run] `seeds` contains duplicates".into()));
    }
    Ok(RunConfig {
        n_iters: r.require("n_iters")?,
        seeds,
        log_every,
        output_dir: PathBuf::from(r.get::<String>("output_dir")?.unwrap_or_else(|| "out".into())),
        threads: r.get("threads")?.unwrap_or(0),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        let empty = Section::new();
        let get = |name: &str| sections.get(name).unwrap_or(&empty);
        check_keys("problem", get("problem"), PROBLEM_KEYS, false)?;
        check_keys("method", get("method"), METHOD_KEYS, true)?;
        check_keys("run", get("run"), RUN_KEYS, false)?;
        for name in ["problem", "method", "run"] {
            if !sections.contains_key(name) {
                return Err(Error::Config(format!("missing section [{name}]")));
            }
        }
        let problem = parse_problem(get("problem"))?;
        let mr = Reader { name: "method", section: get("method") };
        let names: Vec<String> = parse_list(&mr, "methods")?
            .ok_or_else(|| Error::Config("[method] missing key `methods`".into()))?;
        let mut methods = Vec::new();
        for name in names {
            let m = Method::parse(&name)?;
            if methods.iter().any(|c: &MethodConfig| c.method == m) {
                return Err(Error::Config(format!("[method] `{m}` listed twice")));
            }
            methods.push(parse_method(get("method"), m)?);
        }
        let run = parse_run(get("run"))?;
        let echo = sections
            .iter()
            .map(|(name, sec)| {
                let body = sec.iter().map(|(k, e)| format!("{k}={}", e.value)).collect::<Vec<_>>().join(" ");
                (format!("config.{name}"), body)
            })
            .collect();
        Ok(Self { problem, methods, run, echo })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The configuration as `config.<section>` header entries.
    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }

    pub fn method(&self, m: Method) -> Option<&MethodConfig> {
        self.methods.iter().find(|c| c.method == m)
    }
}
