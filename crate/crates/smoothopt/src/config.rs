//! Sectioned `key = value` run configuration.
//!
//! Every key is checked against the sections below; anything unknown is
//! an error. Missing keys take defaults, some of which depend on the
//! objective kind. `RunConfig::to_ini` writes the effective values back
//! out so a run can be repeated from its echo.
//!
//! ```ini
//! [design]      dim, lower, upper, periodic, sigma
//! [optimizer]   gamma_pan, gamma_osc, eta, beta, alpha, n0, sigma_max_factor, k_max,
//!               subproblem_budget, gradient_tol, step_tol
//! [smoothing]   samples, skip, delta, weighting
//! [objective]   kind, failure_policy, penalty_value, plus kind-specific keys
//! [execution]   seed, workers, runs, out
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use smoothopt_core::cohesive::{
    ChainModel, CohesiveParams, LoadSchedule, REFERENCE_K_BEND, REFERENCE_LOAD, REFERENCE_NODES, REFERENCE_PRECRACK,
};
use smoothopt_core::objectives::{FailurePolicy, HerbieStep};
use smoothopt_core::optimizer::{MoveLimitConfig, OptimizerConfig};
use smoothopt_core::subproblem::SubproblemSettings;
use smoothopt_core::{DesignSpace, Weighting};

use crate::format::num;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Syntax(String),
    #[error("unknown key [{section}] {key}")]
    UnknownKey { section: String, key: String },
    #[error("[{section}] {key} = {value:?}: {reason}")]
    BadValue { section: String, key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

const SECTIONS: [&str; 5] = ["design", "optimizer", "smoothing", "objective", "execution"];

const DESIGN_KEYS: &[&str] = &["dim", "lower", "upper", "periodic", "sigma"];
const OPTIMIZER_KEYS: &[&str] = &[
    "gamma_pan",
    "gamma_osc",
    "eta",
    "beta",
    "alpha",
    "n0",
    "sigma_max_factor",
    "k_max",
    "subproblem_budget",
    "gradient_tol",
    "step_tol",
];
const SMOOTHING_KEYS: &[&str] = &["samples", "skip", "delta", "weighting"];
const EXECUTION_KEYS: &[&str] = &["seed", "workers", "runs", "out"];
const OBJECTIVE_COMMON: &[&str] = &["kind", "failure_policy", "penalty_value"];
const HERBIE_KEYS: &[&str] = &["c_step", "x_step"];
const QUADRATIC_KEYS: &[&str] = &["a", "b", "c"];
const STEP_KEYS: &[&str] = &["axis", "location", "height"];
const EXTERNAL_KEYS: &[&str] = &["command", "args", "timeout"];
const CHAIN_KEYS: &[&str] = &[
    "n_nodes",
    "k_bend",
    "precrack",
    "length",
    "phi_n",
    "phi_s",
    "r",
    "delta_n_star",
    "delta_s_star",
    "final_displacement",
    "steps",
    "rigid_interface",
];

/// Raw `section.key -> value` pairs, before defaults and validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut raw = Self::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(ConfigError::Syntax(format!("key {k:?} appears before any section")));
                }
                continue;
            };
            for (k, v) in props.iter() {
                raw.set(section, k, v)?;
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let section = section.trim().to_ascii_lowercase();
        let key = key.trim().to_ascii_lowercase();
        if !SECTIONS.contains(&section.as_str()) {
            return Err(ConfigError::UnknownKey { section, key });
        }
        self.entries.insert((section, key), value.trim().to_string());
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("override {spec:?} is not section.key=value")))?;
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| ConfigError::Syntax(format!("override {spec:?} is not section.key=value")))?;
        self.set(section, key, value)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(String::as_str)
    }

    fn check_keys(&self, kind: &str) -> Result<()> {
        let kind_keys: &[&str] = match kind {
            "herbie_step" => HERBIE_KEYS,
            "quadratic" => QUADRATIC_KEYS,
            "step" => STEP_KEYS,
            "external" => EXTERNAL_KEYS,
            "cohesive_chain" => CHAIN_KEYS,
            _ => &[],
        };
        for (section, key) in self.entries.keys() {
            let known = match section.as_str() {
                "design" => DESIGN_KEYS.contains(&key.as_str()),
                "optimizer" => OPTIMIZER_KEYS.contains(&key.as_str()),
                "smoothing" => SMOOTHING_KEYS.contains(&key.as_str()),
                "execution" => EXECUTION_KEYS.contains(&key.as_str()),
                "objective" => OBJECTIVE_COMMON.contains(&key.as_str()) || kind_keys.contains(&key.as_str()),
                _ => false,
            };
            if !known {
                return Err(ConfigError::UnknownKey { section: section.clone(), key: key.clone() });
            }
        }
        Ok(())
    }
}

fn bad(section: &str, key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { section: section.into(), key: key.into(), value: value.into(), reason: reason.into() }
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| bad(section, key, v, e.to_string())),
        }
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed::<f64>(section, key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(bad(section, key, &v.to_string(), "must be finite"));
        }
        Ok(v)
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed::<usize>(section, key)?.unwrap_or(default))
    }

    fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw.get(section, key) {
            None => Ok(default),
            Some(v) => parse_bool(v).ok_or_else(|| bad(section, key, v, "expected true or false")),
        }
    }

    fn list(&self, section: &str, key: &str) -> Option<Vec<&str>> {
        self.raw.get(section, key).map(split_list)
    }

    /// A per-axis list; a single entry is broadcast to `dim` axes.
    fn f64_list(&self, section: &str, key: &str, dim: usize, default: &[f64]) -> Result<Vec<f64>> {
        let Some(items) = self.list(section, key) else {
            return Ok(default.to_vec());
        };
        let values = items
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(section, key, s, e.to_string())))
            .collect::<Result<Vec<f64>>>()?;
        broadcast(values, dim).ok_or_else(|| bad(section, key, self.raw.get(section, key).unwrap_or(""), format!("expected 1 or {dim} entries")))
    }
}

pub fn split_list(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect()
}

fn broadcast<T: Clone>(values: Vec<T>, dim: usize) -> Option<Vec<T>> {
    match values.len() {
        1 => Some(vec![values[0].clone(); dim]),
        n if n == dim => Some(values),
        _ => None,
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
    /// Physical target standard deviation per axis.
    pub sigma: Vec<f64>,
}

impl DesignSection {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Internal units put every target standard deviation at 1.
    pub fn space(&self) -> std::result::Result<DesignSpace, smoothopt_core::Error> {
        DesignSpace::with_common_sigma(self.lower.clone(), self.upper.clone(), self.periodic.clone(), &self.sigma, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub n_nodes: usize,
    pub k_bend: f64,
    pub precrack: usize,
    pub length: f64,
    pub cohesive: CohesiveParams,
    pub load: LoadSchedule,
    pub rigid_interface: bool,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            n_nodes: REFERENCE_NODES,
            k_bend: REFERENCE_K_BEND,
            precrack: REFERENCE_PRECRACK,
            length: 1.0,
            cohesive: CohesiveParams::default(),
            load: REFERENCE_LOAD,
            rigid_interface: false,
        }
    }
}

impl ChainSpec {
    pub fn model(&self) -> std::result::Result<ChainModel, smoothopt_core::Error> {
        let mut m = ChainModel::new(self.n_nodes, self.k_bend, self.precrack, self.cohesive, self.load)?;
        m.length = self.length;
        m.rigid_interface = self.rigid_interface;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSpec {
    pub command: String,
    pub args: Vec<String>,
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    HerbieStep(HerbieStep),
    Quadratic { a: Vec<f64>, b: Vec<f64>, c: f64 },
    Step { axis: usize, location: f64, height: f64 },
    External(ExternalSpec),
    CohesiveChain(ChainSpec),
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::HerbieStep(_) => "herbie_step",
            ObjectiveKind::Quadratic { .. } => "quadratic",
            ObjectiveKind::Step { .. } => "step",
            ObjectiveKind::External(_) => "external",
            ObjectiveKind::CohesiveChain(_) => "cohesive_chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub failure_policy: FailurePolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionSection {
    pub seed: u64,
    pub workers: usize,
    pub runs: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub design: DesignSection,
    pub optimizer: OptimizerConfig,
    /// `σ_max / σ_target`, kept for the echo.
    pub sigma_max_factor: f64,
    pub objective: ObjectiveSpec,
    pub execution: ExecutionSection,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let r = Reader { raw };
        let kind = raw.get("objective", "kind").unwrap_or("herbie_step").to_string();
        if !["herbie_step", "quadratic", "step", "external", "cohesive_chain"].contains(&kind.as_str()) {
            return Err(bad("objective", "kind", &kind, "expected herbie_step, quadratic, step, external or cohesive_chain"));
        }
        raw.check_keys(&kind)?;
        let chain = kind == "cohesive_chain";

        let default_dim = if chain { 2 } else { 1 };
        let listed = ["lower", "upper", "periodic", "sigma"].iter().filter_map(|k| r.list("design", k)).map(|l| l.len()).find(|&n| n > 1);
        let dim = match r.parsed::<usize>("design", "dim")? {
            Some(d) => d,
            None => listed.unwrap_or(default_dim),
        };
        if dim == 0 {
            return Err(bad("design", "dim", "0", "must be at least 1"));
        }
        let (lo, hi, sig) = if chain { (0.5, 2.0, 0.1) } else { (-2.0, 2.0, 0.2) };
        let periodic = match r.list("design", "periodic") {
            None => vec![false; dim],
            Some(items) => {
                let flags = items
                    .iter()
                    .map(|s| parse_bool(s).ok_or_else(|| bad("design", "periodic", s, "expected true or false")))
                    .collect::<Result<Vec<bool>>>()?;
                broadcast(flags, dim).ok_or_else(|| bad("design", "periodic", raw.get("design", "periodic").unwrap_or(""), format!("expected 1 or {dim} entries")))?
            }
        };
        let design = DesignSection {
            lower: r.f64_list("design", "lower", dim, &vec![lo; dim])?,
            upper: r.f64_list("design", "upper", dim, &vec![hi; dim])?,
            periodic,
            sigma: r.f64_list("design", "sigma", dim, &vec![sig; dim])?,
        };
        design.space().map_err(|e| ConfigError::Invalid(format!("design: {e}")))?;

        let sigma_max_factor = r.f64_or("optimizer", "sigma_max_factor", if chain { 3.0 } else { 10.0 })?;
        let defaults = MoveLimitConfig::defaults(dim, 1.0);
        let move_limit = MoveLimitConfig {
            gamma_pan: r.f64_or("optimizer", "gamma_pan", defaults.gamma_pan)?,
            gamma_osc: r.f64_or("optimizer", "gamma_osc", defaults.gamma_osc)?,
            eta: r.f64_or("optimizer", "eta", defaults.eta)?,
            beta: r.f64_or("optimizer", "beta", defaults.beta)?,
            alpha: r.usize_or("optimizer", "alpha", defaults.alpha)?,
            n0: r.usize_or("optimizer", "n0", defaults.n0)?,
            sigma_target: 1.0,
            sigma_max: sigma_max_factor,
            k_max: r.usize_or("optimizer", "k_max", defaults.k_max)?,
            delta: r.f64_or("smoothing", "delta", defaults.delta)?,
        };
        let sub_defaults = SubproblemSettings::default();
        let subproblem = SubproblemSettings {
            budget: r.usize_or("optimizer", "subproblem_budget", sub_defaults.budget)?,
            gradient_tol: r.f64_or("optimizer", "gradient_tol", sub_defaults.gradient_tol)?,
            step_tol: r.f64_or("optimizer", "step_tol", sub_defaults.step_tol)?,
        };
        let samples = r.usize_or("smoothing", "samples", 1 << 16)?;
        let skip = match r.parsed::<u64>("smoothing", "skip")? {
            Some(s) => s,
            None => (samples as u64).saturating_sub(1),
        };
        let weighting = match raw.get("smoothing", "weighting").unwrap_or("self-normalized") {
            "self-normalized" => Weighting::SelfNormalized,
            "likelihood-ratio" => Weighting::LikelihoodRatio,
            other => return Err(bad("smoothing", "weighting", other, "expected self-normalized or likelihood-ratio")),
        };

        let failure_policy = match raw.get("objective", "failure_policy").unwrap_or("abort") {
            "abort" => {
                if raw.get("objective", "penalty_value").is_some() {
                    return Err(ConfigError::Invalid("penalty_value needs failure_policy = penalty".into()));
                }
                FailurePolicy::Abort
            }
            "penalty" => {
                let v = r
                    .parsed::<f64>("objective", "penalty_value")?
                    .ok_or_else(|| ConfigError::Invalid("failure_policy = penalty needs penalty_value".into()))?;
                if !v.is_finite() {
                    return Err(bad("objective", "penalty_value", &v.to_string(), "must be finite"));
                }
                FailurePolicy::Penalty(v)
            }
            other => return Err(bad("objective", "failure_policy", other, "expected abort or penalty")),
        };

        let optimizer = OptimizerConfig { move_limit, subproblem, samples, skip, weighting, failure_policy };
        optimizer.validate().map_err(|e| ConfigError::Invalid(format!("optimizer: {e}")))?;

        let kind = read_kind(&r, &kind, dim)?;
        let execution = ExecutionSection {
            seed: r.parsed::<u64>("execution", "seed")?.unwrap_or(1),
            workers: r.usize_or("execution", "workers", 1)?,
            runs: r.usize_or("execution", "runs", 1)?,
            out: PathBuf::from(raw.get("execution", "out").unwrap_or("out")),
        };
        if execution.workers == 0 {
            return Err(bad("execution", "workers", "0", "must be at least 1"));
        }
        if execution.runs == 0 {
            return Err(bad("execution", "runs", "0", "must be at least 1"));
        }
        Ok(Self { design, optimizer, sigma_max_factor, objective: ObjectiveSpec { kind, failure_policy }, execution })
    }

    pub fn dim(&self) -> usize {
        self.design.dim()
    }

    /// The effective configuration in loadable form.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
        let d = &self.design;
        let _ = writeln!(s, "[design]");
        let _ = writeln!(s, "dim = {}", d.dim());
        let _ = writeln!(s, "lower = {}", list(&d.lower));
        let _ = writeln!(s, "upper = {}", list(&d.upper));
        let _ = writeln!(s, "periodic = {}", d.periodic.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", "));
        let _ = writeln!(s, "sigma = {}", list(&d.sigma));
        let ml = &self.optimizer.move_limit;
        let sp = &self.optimizer.subproblem;
        let _ = writeln!(s, "\n[optimizer]");
        let _ = writeln!(s, "gamma_pan = {}", num(ml.gamma_pan));
        let _ = writeln!(s, "gamma_osc = {}", num(ml.gamma_osc));
        let _ = writeln!(s, "eta = {}", num(ml.eta));
        let _ = writeln!(s, "beta = {}", num(ml.beta));
        let _ = writeln!(s, "alpha = {}", ml.alpha);
        let _ = writeln!(s, "n0 = {}", ml.n0);
        let _ = writeln!(s, "sigma_max_factor = {}", num(self.sigma_max_factor));
        let _ = writeln!(s, "k_max = {}", ml.k_max);
        let _ = writeln!(s, "subproblem_budget = {}", sp.budget);
        let _ = writeln!(s, "gradient_tol = {}", num(sp.gradient_tol));
        let _ = writeln!(s, "step_tol = {}", num(sp.step_tol));
        let _ = writeln!(s, "\n[smoothing]");
        let _ = writeln!(s, "samples = {}", self.optimizer.samples);
        let _ = writeln!(s, "skip = {}", self.optimizer.skip);
        let _ = writeln!(s, "delta = {}", num(ml.delta));
        let weighting = match self.optimizer.weighting {
            Weighting::SelfNormalized => "self-normalized",
            Weighting::LikelihoodRatio => "likelihood-ratio",
        };
        let _ = writeln!(s, "weighting = {weighting}");
        let _ = writeln!(s, "\n[objective]");
        let _ = writeln!(s, "kind = {}", self.objective.kind.name());
        match self.objective.failure_policy {
            FailurePolicy::Abort => {
                let _ = writeln!(s, "failure_policy = abort");
            }
            FailurePolicy::Penalty(p) => {
                let _ = writeln!(s, "failure_policy = penalty");
                let _ = writeln!(s, "penalty_value = {}", num(p));
            }
        }
        match &self.objective.kind {
            ObjectiveKind::HerbieStep(h) => {
                let _ = writeln!(s, "c_step = {}", num(h.c_step));
                let _ = writeln!(s, "x_step = {}", num(h.x_step));
            }
            ObjectiveKind::Quadratic { a, b, c } => {
                let _ = writeln!(s, "a = {}", list(a));
                let _ = writeln!(s, "b = {}", list(b));
                let _ = writeln!(s, "c = {}", num(*c));
            }
            ObjectiveKind::Step { axis, location, height } => {
                let _ = writeln!(s, "axis = {axis}");
                let _ = writeln!(s, "location = {}", num(*location));
                let _ = writeln!(s, "height = {}", num(*height));
            }
            ObjectiveKind::External(e) => {
                let _ = writeln!(s, "command = {}", e.command);
                if !e.args.is_empty() {
                    let _ = writeln!(s, "args = {}", e.args.join(" "));
                }
                let _ = writeln!(s, "timeout = {}", num(e.timeout_secs));
            }
            ObjectiveKind::CohesiveChain(c) => {
                let _ = writeln!(s, "n_nodes = {}", c.n_nodes);
                let _ = writeln!(s, "k_bend = {}", num(c.k_bend));
                let _ = writeln!(s, "precrack = {}", c.precrack);
                let _ = writeln!(s, "length = {}", num(c.length));
                let _ = writeln!(s, "phi_n = {}", num(c.cohesive.phi_n));
                let _ = writeln!(s, "phi_s = {}", num(c.cohesive.phi_s));
                let _ = writeln!(s, "r = {}", num(c.cohesive.r));
                let _ = writeln!(s, "delta_n_star = {}", num(c.cohesive.delta_n_star));
                let _ = writeln!(s, "delta_s_star = {}", num(c.cohesive.delta_s_star));
                let _ = writeln!(s, "final_displacement = {}", num(c.load.final_displacement));
                let _ = writeln!(s, "steps = {}", c.load.steps);
                let _ = writeln!(s, "rigid_interface = {}", c.rigid_interface);
            }
        }
        let e = &self.execution;
        let _ = writeln!(s, "\n[execution]");
        let _ = writeln!(s, "seed = {}", e.seed);
        let _ = writeln!(s, "workers = {}", e.workers);
        let _ = writeln!(s, "runs = {}", e.runs);
        let _ = writeln!(s, "out = {}", e.out.display());
        s
    }
}

fn read_kind(r: &Reader<'_>, kind: &str, dim: usize) -> Result<ObjectiveKind> {
    const S: &str = "objective";
    Ok(match kind {
        "herbie_step" => {
            let d = HerbieStep::default();
            ObjectiveKind::HerbieStep(HerbieStep { c_step: r.f64_or(S, "c_step", d.c_step)?, x_step: r.f64_or(S, "x_step", d.x_step)? })
        }
        "quadratic" => {
            let mut identity = vec![0.0; dim * dim];
            for i in 0..dim {
                identity[i * dim + i] = 1.0;
            }
            let a = r.f64_list(S, "a", dim * dim, &identity)?;
            let b = r.f64_list(S, "b", dim, &vec![0.0; dim])?;
            let c = r.f64_or(S, "c", 0.0)?;
            smoothopt_core::objectives::Quadratic::new(a.clone(), b.clone(), c).map_err(|e| ConfigError::Invalid(format!("objective: {e}")))?;
            ObjectiveKind::Quadratic { a, b, c }
        }
        "step" => {
            let axis = r.usize_or(S, "axis", 0)?;
            if axis >= dim {
                return Err(bad(S, "axis", &axis.to_string(), format!("must be below dim = {dim}")));
            }
            ObjectiveKind::Step { axis, location: r.f64_or(S, "location", 0.0)?, height: r.f64_or(S, "height", 1.0)? }
        }
        "external" => {
            let command = r.raw.get(S, "command").ok_or_else(|| ConfigError::Invalid("external objective needs command".into()))?;
            let args = r.list(S, "args").unwrap_or_default().into_iter().map(String::from).collect();
            let timeout_secs = r.f64_or(S, "timeout", 60.0)?;
            if !(timeout_secs > 0.0) {
                return Err(bad(S, "timeout", &timeout_secs.to_string(), "must be positive"));
            }
            ObjectiveKind::External(ExternalSpec { command: command.to_string(), args, timeout_secs })
        }
        _ => {
            let d = ChainSpec::default();
            let cohesive = CohesiveParams {
                phi_n: r.f64_or(S, "phi_n", d.cohesive.phi_n)?,
                phi_s: r.f64_or(S, "phi_s", d.cohesive.phi_s)?,
                r: r.f64_or(S, "r", d.cohesive.r)?,
                delta_n_star: r.f64_or(S, "delta_n_star", d.cohesive.delta_n_star)?,
                delta_s_star: r.f64_or(S, "delta_s_star", d.cohesive.delta_s_star)?,
            };
            let spec = ChainSpec {
                n_nodes: r.usize_or(S, "n_nodes", d.n_nodes)?,
                k_bend: r.f64_or(S, "k_bend", d.k_bend)?,
                precrack: r.usize_or(S, "precrack", d.precrack)?,
                length: r.f64_or(S, "length", d.length)?,
                cohesive,
                load: LoadSchedule {
                    final_displacement: r.f64_or(S, "final_displacement", d.load.final_displacement)?,
                    steps: r.usize_or(S, "steps", d.load.steps)?,
                },
                rigid_interface: r.bool_or(S, "rigid_interface", d.rigid_interface)?,
            };
            let model = spec.model().map_err(|e| ConfigError::Invalid(format!("objective: {e}")))?;
            smoothopt_core::cohesive::ZoneMap { zones: dim }
                .strength(&vec![1.0; dim], model.n_nodes, model.precrack)
                .map_err(|e| ConfigError::Invalid(format!("objective: {e}")))?;
            ObjectiveKind::CohesiveChain(spec)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<RunConfig> {
        RunConfig::from_raw(&RawConfig::parse(text)?)
    }

    #[test]
    fn empty_config_is_one_dimensional_herbie() {
        let c = load("").unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.objective.kind.name(), "herbie_step");
        assert_eq!(c.optimizer.move_limit.n0, 3);
        assert_eq!(c.optimizer.samples, 1 << 16);
        assert_eq!(c.optimizer.skip, (1 << 16) - 1);
        assert_eq!(c.optimizer.move_limit.sigma_max, 10.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(load("[design]\ncolour = red\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(load("[nowhere]\nx = 1\n"), Err(ConfigError::UnknownKey { .. })));
        // chain keys are unknown to other kinds
        assert!(matches!(load("[objective]\nkind = herbie_step\nk_bend = 1\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(load("stray = 1\n[design]\ndim = 1\n").is_err());
    }

    #[test]
    fn lists_broadcast_and_set_dim() {
        let c = load("[design]\nlower = 0, 0, 0\nupper = 1\nsigma = 0.1\n").unwrap();
        assert_eq!(c.dim(), 3);
        assert_eq!(c.design.upper, vec![1.0; 3]);
        assert!(load("[design]\ndim = 2\nlower = 0, 0, 0\n").is_err());
    }

    #[test]
    fn validation_names_the_parameter() {
        let err = load("[optimizer]\ngamma_osc = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("gamma_osc"), "{err}");
        assert!(load("[smoothing]\nweighting = fancy\n").is_err());
        assert!(load("[objective]\nfailure_policy = penalty\n").is_err());
        assert!(load("[objective]\nfailure_policy = penalty\npenalty_value = inf\n").is_err());
        assert!(load("[execution]\nworkers = 0\n").is_err());
        assert!(load("[objective]\nkind = external\n").is_err());
        assert!(load("[objective]\nkind = nope\n").is_err());
        assert!(load("[design]\nlower = 1\nupper = 0\n").is_err());
    }

    #[test]
    fn chain_defaults() {
        let c = load("[objective]\nkind = cohesive_chain\n").unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.design.lower, vec![0.5, 0.5]);
        assert_eq!(c.optimizer.move_limit.sigma_max, 3.0);
        let ObjectiveKind::CohesiveChain(spec) = &c.objective.kind else { panic!() };
        assert_eq!(spec.model().unwrap(), ChainModel::reference());
    }

    #[test]
    fn overrides_apply_and_are_checked() {
        let mut raw = RawConfig::parse("[optimizer]\nk_max = 10\n").unwrap();
        raw.apply_override("optimizer.k_max=3").unwrap();
        raw.apply_override("execution.seed = 9").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(c.optimizer.move_limit.k_max, 3);
        assert_eq!(c.execution.seed, 9);
        assert!(raw.apply_override("k_max=3").is_err());
        assert!(raw.apply_override("optimizer.k_max").is_err());
        raw.apply_override("optimizer.bogus=1").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let texts = [
            "",
            "[objective]\nkind = cohesive_chain\nfailure_policy = penalty\npenalty_value = 1e6\n[design]\ndim = 6\n",
            "[objective]\nkind = quadratic\nb = 1, -2\nc = 0.3\n[design]\ndim = 2\nperiodic = true, false\n",
            "[objective]\nkind = external\ncommand = /bin/echo\nargs = 3.5\ntimeout = 2.5\n[smoothing]\nweighting = likelihood-ratio\n",
            "[objective]\nkind = step\naxis = 1\n[design]\nlower = -1, -1\nsigma = 0.1, 0.3\n",
        ];
        for text in texts {
            let c = load(text).unwrap();
            let again = load(&c.to_ini()).unwrap();
            assert_eq!(c, again, "{}", c.to_ini());
        }
    }
}
