//! Experiment configuration files and their schema check.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hibsa::{Schedule, SolverConfig};
use toml::{Table, Value};

pub const DEFAULT_SEED_COUNT: u64 = 10;

/// Every schema violation found in one config file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .violations.join("\n"))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        ConfigError {
            violations: vec![msg.into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Bilinear {
        dim: usize,
        radius: Option<f64>,
        gda_eta: f64,
        gda_lambda: f64,
    },
    Jamming {
        users: usize,
        channels: usize,
        snr_db: f64,
    },
    MaxMin {
        users: usize,
        channels: usize,
        snr_db: f64,
        nu: Vec<f64>,
        lse_max_iter: usize,
        lse_tol: f64,
    },
    Robust {
        dim: usize,
        samples: usize,
        flip: f64,
        lambda: f64,
        prior: Vec<f64>,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Bilinear { .. } => "bilinear",
            ProblemSpec::Jamming { .. } => "jamming",
            ProblemSpec::MaxMin { .. } => "maxmin",
            ProblemSpec::Robust { .. } => "robust",
        }
    }

    pub fn available_presets(&self) -> Vec<String> {
        match self {
            ProblemSpec::Bilinear { .. } => vec!["gda".into(), "hibsa-fig1".into(), "hibsa".into()],
            ProblemSpec::Jamming { .. } => vec!["hibsa".into(), "frozen".into()],
            ProblemSpec::MaxMin { nu, .. } => std::iter::once("hibsa".to_string())
                .chain(nu.iter().map(|v| lse_preset(*v)))
                .collect(),
            ProblemSpec::Robust { .. } => vec!["hibsa".into()],
        }
    }

    pub fn default_presets(&self) -> Vec<String> {
        match self {
            ProblemSpec::Bilinear { .. } => vec!["gda".into(), "hibsa-fig1".into()],
            _ => self.available_presets(),
        }
    }
}

pub fn lse_preset(nu: f64) -> String {
    format!("lse-nu{nu}")
}

/// Solver section. The proximal-linear moduli depend on the instance and are
/// filled in by [`SolverSpec::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub base: SolverConfig,
    pub surrogate_scale: Option<f64>,
}

impl SolverSpec {
    pub fn resolve(&self, l_x: &[f64], seed: u64) -> SolverConfig {
        let mut config = self.base.clone();
        config.seed = seed;
        if let Some(scale) = self.surrogate_scale {
            config.surrogate = hibsa::Surrogate::ProximalLinear {
                moduli: l_x.iter().map(|l| scale * l).collect(),
            };
        }
        config
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    pub presets: Vec<String>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::single(format!("malformed config: {}", e.message())))?;
    let mut errors = Vec::new();

    let mut top = Section::new(&root, "", &mut errors);
    let experiment = top.string("experiment", true);
    let seeds = top.int_array("seeds");
    let output_dir = top.string("output_dir", false);
    let presets = top.string_array("presets");
    let problem_table = top.table("problem");
    let solver_table = top.table("solver");
    top.finish();

    let problem = match (experiment.as_deref(), problem_table) {
        (Some(name), Some(t)) => parse_problem(name, t, &mut errors),
        (Some(name), None) => {
            if ["bilinear", "jamming", "maxmin", "robust"].contains(&name) {
                errors.push("missing required table `problem`".into());
            } else {
                errors.push(unknown_experiment(name));
            }
            None
        }
        (None, Some(_)) | (None, None) => None,
    };

    let solver = match solver_table {
        Some(t) => parse_solver(t, &mut errors),
        None => {
            errors.push("missing required table `solver`".into());
            None
        }
    };

    if let Some(seeds) = &seeds {
        if seeds.is_empty() {
            errors.push("`seeds` must not be empty".into());
        }
        let distinct: BTreeSet<_> = seeds.iter().collect();
        if distinct.len() != seeds.len() {
            errors.push("`seeds` must not repeat".into());
        }
    }

    let presets = match (&problem, presets) {
        (Some(p), Some(list)) => {
            let available = p.available_presets();
            for name in &list {
                if !available.contains(name) {
                    errors.push(format!(
                        "unknown preset `{name}` for {} (available: {})",
                        p.name(),
                        available.join(", ")
                    ));
                }
            }
            if list.is_empty() {
                errors.push("`presets` must not be empty".into());
            }
            list
        }
        (Some(p), None) => p.default_presets(),
        (None, _) => Vec::new(),
    };

    match (problem, solver) {
        (Some(problem), Some(solver)) if errors.is_empty() => {
            let output_dir = output_dir
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("results").join(problem.name()));
            Ok(ExperimentConfig {
                seeds: seeds.unwrap_or_else(|| (0..DEFAULT_SEED_COUNT).collect()),
                problem,
                solver,
                presets,
                output_dir,
            })
        }
        _ => Err(ConfigError { violations: errors }),
    }
}

fn unknown_experiment(name: &str) -> String {
    format!("unknown experiment `{name}` (expected bilinear, jamming, maxmin or robust)")
}

fn parse_problem(name: &str, table: &Table, errors: &mut Vec<String>) -> Option<ProblemSpec> {
    let mut s = Section::new(table, "problem", errors);
    let spec = match name {
        "bilinear" => {
            let dim = s.count("dim", Some(10));
            let radius = s.positive("radius", None, false);
            let gda_eta = s.positive("gda_eta", Some(1.0), false);
            let gda_lambda = s.positive("gda_lambda", Some(0.5), false);
            (|| {
                Some(ProblemSpec::Bilinear {
                    dim: dim?,
                    radius,
                    gda_eta: gda_eta?,
                    gda_lambda: gda_lambda?,
                })
            })()
        }
        "jamming" => {
            let users = s.count("users", None);
            let channels = s.count("channels", None);
            let snr_db = s.finite("snr_db", None);
            (|| {
                Some(ProblemSpec::Jamming {
                    users: users?,
                    channels: channels?,
                    snr_db: snr_db?,
                })
            })()
        }
        "maxmin" => {
            let users = s.count("users", None);
            let channels = s.count("channels", None);
            let snr_db = s.finite("snr_db", None);
            let nu = s.float_array("nu").or_else(|| Some(vec![1.0, 5.0, 7.0]));
            if let Some(nu) = &nu {
                if nu.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    s.error("`problem.nu` entries must be positive");
                }
                let distinct: BTreeSet<String> = nu.iter().map(|v| v.to_string()).collect();
                if distinct.len() != nu.len() {
                    s.error("`problem.nu` must not repeat");
                }
            }
            let lse_max_iter = s.count("lse_max_iter", Some(5000));
            let lse_tol = s.positive("lse_tol", Some(1e-9), false);
            (|| {
                Some(ProblemSpec::MaxMin {
                    users: users?,
                    channels: channels?,
                    snr_db: snr_db?,
                    nu: nu?,
                    lse_max_iter: lse_max_iter?,
                    lse_tol: lse_tol?,
                })
            })()
        }
        "robust" => {
            let dim = s.count("dim", None);
            let samples = s.count("samples", None);
            let flip = s.finite("flip", Some(0.0));
            if let Some(f) = flip {
                if !(0.0..0.5).contains(&f) {
                    s.error("`problem.flip` must lie in [0, 0.5)");
                }
            }
            let lambda = s.positive("lambda", None, true);
            let prior = s.float_array("prior").or_else(|| Some(vec![0.5, 0.5]));
            if let Some(q) = &prior {
                let sum: f64 = q.iter().sum();
                if q.len() != 2 || q.iter().any(|v| *v < 0.0) || (sum - 1.0).abs() > 1e-12 {
                    s.error("`problem.prior` must be two nonnegative weights summing to 1");
                }
            }
            (|| {
                Some(ProblemSpec::Robust {
                    dim: dim?,
                    samples: samples?,
                    flip: flip?,
                    lambda: lambda?,
                    prior: prior?,
                })
            })()
        }
        other => {
            s.error(unknown_experiment(other));
            s.skip_unknown();
            None
        }
    };
    let clean = s.finish();
    spec.filter(|_| clean)
}

fn parse_solver(table: &Table, errors: &mut Vec<String>) -> Option<SolverSpec> {
    let defaults = SolverConfig::default();
    let mut s = Section::new(table, "solver", errors);
    let rho = s.positive("rho", None, true);
    let kappa = s.finite("kappa", Some(defaults.kappa));
    if let Some(k) = kappa {
        if !(k > 2.0) {
            s.error(format!("kappa must exceed 2 (got {k})"));
        }
    }
    let schedule_name = s.string("schedule", false).unwrap_or_else(|| "auto".into());
    let beta = s.positive("beta", None, false);
    let gamma = s.optional_finite("gamma");
    if let Some(g) = gamma {
        if g < 0.0 {
            s.error("`solver.gamma` must be nonnegative");
        }
    }
    let schedule = match schedule_name.as_str() {
        "constant" => {
            if beta.is_none() {
                s.error("missing required key `solver.beta` (needed by the constant schedule)");
            }
            if gamma.is_none() {
                s.error("missing required key `solver.gamma` (needed by the constant schedule)");
            }
            Some(Schedule::Constant {
                beta: beta.unwrap_or(1.0),
                gamma: gamma.unwrap_or(0.0),
            })
        }
        "diminishing" | "fig1" | "auto" => {
            if beta.is_some() || gamma.is_some() {
                s.error("`solver.beta` and `solver.gamma` only apply to the constant schedule");
            }
            Some(match schedule_name.as_str() {
                "diminishing" => Schedule::Diminishing,
                "fig1" => Schedule::Fig1,
                _ => Schedule::Auto,
            })
        }
        other => {
            s.error(format!(
                "unknown schedule `{other}` (expected constant, diminishing, fig1 or auto)"
            ));
            None
        }
    };
    let epsilon = s.finite("epsilon", Some(defaults.epsilon));
    if let Some(e) = epsilon {
        if e < 0.0 {
            s.error("`solver.epsilon` must be nonnegative");
        }
    }
    let max_iter = s.count("max_iter", Some(defaults.max_iter as usize));
    let inner_tol = s.positive("inner_tol", Some(defaults.inner_tol), false);
    let inner_max_iter = s.count("inner_max_iter", Some(defaults.inner_max_iter));
    let enforce_conditions = s.boolean("enforce_conditions", defaults.enforce_conditions);
    let surrogate = s.string("surrogate", false).unwrap_or_else(|| "qub".into());
    let surrogate_scale = s.positive("surrogate_scale", None, false);
    match surrogate.as_str() {
        "qub" if surrogate_scale.is_some() => {
            s.error("`solver.surrogate_scale` only applies to the proximal_linear surrogate")
        }
        "qub" => {}
        "proximal_linear" if surrogate_scale.is_none() => {
            s.error("missing required key `solver.surrogate_scale` (needed by the proximal_linear surrogate)")
        }
        "proximal_linear" => {}
        other => s.error(format!(
            "unknown surrogate `{other}` (expected qub or proximal_linear)"
        )),
    }
    let beta_min = s.positive("beta_min", None, false);
    let clean = s.finish();
    if !clean {
        return None;
    }
    let base = SolverConfig {
        rho: rho?,
        kappa: kappa?,
        schedule: schedule?,
        epsilon: epsilon?,
        max_iter: max_iter? as u64,
        inner_tol: inner_tol?,
        inner_max_iter: inner_max_iter?,
        enforce_conditions,
        surrogate: hibsa::Surrogate::QuadraticUpperBound,
        beta_min,
        seed: 0,
    };
    if let Err(e) = base.validate() {
        errors.push(format!("solver: {e}"));
        return None;
    }
    Some(SolverSpec {
        base,
        surrogate_scale,
    })
}

/// Reads keys out of one table, recording violations and the keys it has seen.
struct Section<'t, 'e> {
    table: &'t Table,
    prefix: &'static str,
    errors: &'e mut Vec<String>,
    seen: BTreeSet<&'static str>,
    start: usize,
    skip_unknown: bool,
}

impl<'t, 'e> Section<'t, 'e> {
    fn new(table: &'t Table, prefix: &'static str, errors: &'e mut Vec<String>) -> Self {
        let start = errors.len();
        Section {
            table,
            prefix,
            errors,
            seen: BTreeSet::new(),
            start,
            skip_unknown: false,
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn skip_unknown(&mut self) {
        self.skip_unknown = true;
    }

    fn get(&mut self, key: &'static str, required: bool) -> Option<&'t Value> {
        self.seen.insert(key);
        let v = self.table.get(key);
        if v.is_none() && required {
            let msg = format!("missing required key `{}`", self.path(key));
            self.error(msg);
        }
        v
    }

    fn wrong_type(&mut self, key: &str, expected: &str) {
        let msg = format!("`{}` must be {expected}", self.path(key));
        self.error(msg);
    }

    fn string(&mut self, key: &'static str, required: bool) -> Option<String> {
        match self.get(key, required)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.wrong_type(key, "a string");
                None
            }
        }
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> bool {
        match self.get(key, false) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.wrong_type(key, "true or false");
                default
            }
        }
    }

    fn table(&mut self, key: &'static str) -> Option<&'t Table> {
        match self.get(key, false)? {
            Value::Table(t) => Some(t),
            _ => {
                self.wrong_type(key, "a table");
                None
            }
        }
    }

    fn number(v: &Value) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    /// A finite real. With a default the key is optional.
    fn finite(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        match self.get(key, default.is_none()) {
            None => default,
            Some(v) => match Self::number(v).filter(|f| f.is_finite()) {
                Some(f) => Some(f),
                None => {
                    self.wrong_type(key, "a finite number");
                    None
                }
            },
        }
    }

    fn optional_finite(&mut self, key: &'static str) -> Option<f64> {
        self.table.get(key)?;
        self.finite(key, None)
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>, required: bool) -> Option<f64> {
        let v = match self.get(key, required) {
            None => return default,
            Some(v) => Self::number(v),
        };
        match v {
            Some(f) if f > 0.0 && f.is_finite() => Some(f),
            _ => {
                self.wrong_type(key, "a positive number");
                None
            }
        }
    }

    fn count(&mut self, key: &'static str, default: Option<usize>) -> Option<usize> {
        match self.get(key, default.is_none()) {
            None => default,
            Some(Value::Integer(i)) if *i >= 1 => Some(*i as usize),
            Some(_) => {
                self.wrong_type(key, "a positive integer");
                None
            }
        }
    }

    fn array(&mut self, key: &'static str) -> Option<&'t Vec<Value>> {
        match self.get(key, false)? {
            Value::Array(a) => Some(a),
            _ => {
                self.wrong_type(key, "an array");
                None
            }
        }
    }

    fn float_array(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let items = self.array(key)?;
        let out: Option<Vec<f64>> = items.iter().map(Self::number).collect();
        if out.is_none() {
            self.wrong_type(key, "an array of numbers");
        }
        out
    }

    fn int_array(&mut self, key: &'static str) -> Option<Vec<u64>> {
        let items = self.array(key)?;
        let out: Option<Vec<u64>> = items
            .iter()
            .map(|v| v.as_integer().and_then(|i| u64::try_from(i).ok()))
            .collect();
        if out.is_none() {
            self.wrong_type(key, "an array of nonnegative integers");
        }
        out
    }

    fn string_array(&mut self, key: &'static str) -> Option<Vec<String>> {
        let items = self.array(key)?;
        let out: Option<Vec<String>> = items.iter().map(|v| v.as_str().map(String::from)).collect();
        if out.is_none() {
            self.wrong_type(key, "an array of strings");
        }
        out
    }

    /// Flags unread keys and reports whether this section added no violations.
    fn finish(self) -> bool {
        if !self.skip_unknown {
            let unknown: Vec<String> = self
                .table
                .keys()
                .filter(|k| !self.seen.contains(k.as_str()))
                .map(|k| format!("unknown key `{}`", self.path(k)))
                .collect();
            self.errors.extend(unknown);
        }
        self.errors.len() == self.start
    }
}
