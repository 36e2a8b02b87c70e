//! Parameter sweeps over belief systems, with CSV and SVG output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::belief::BeliefSystem;
use crate::error::{Error, Result};
use crate::generators::{generate, lazify, TopologySpec};
use crate::graph::DirectedGraph;
use crate::limits::structural_limit;
use crate::mixing::{
    bounds_from_lambda, convergence_time, second_eigenvalue, system_bound, CouplingOptions,
};
use crate::netio::{largest_scc, load_edgelist, normalize_key};
use crate::rng::{derive_seed, stream_rng};
use crate::stochastic::{check_ergodic, equal_weight_matrix, StochasticMatrix};

/// Where a graph comes from: `family:key=val,...` for generated graphs or
/// `file:path=...,directed=true,scc=true`. Both accept `lazy=<alpha>`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Generated {
        spec: TopologySpec,
        lazy: Option<f64>,
    },
    File {
        path: PathBuf,
        directed: bool,
        largest_scc: bool,
        lazy: Option<f64>,
    },
}

impl GraphSource {
    pub fn lazy(&self) -> Option<f64> {
        match self {
            GraphSource::Generated { lazy, .. } | GraphSource::File { lazy, .. } => *lazy,
        }
    }

    /// Builds the graph, overriding the size parameter when `size` is given.
    pub fn build(&self, size: Option<usize>) -> Result<DirectedGraph> {
        let graph = match self {
            GraphSource::Generated { spec, .. } => {
                let spec = match size {
                    Some(s) => spec.clone().with_size(s),
                    None => spec.clone(),
                };
                generate(&spec)?
            }
            GraphSource::File {
                path,
                directed,
                largest_scc: scc,
                ..
            } => {
                if size.is_some() {
                    return Err(Error::Config(
                        "cannot sweep the size of a file graph".into(),
                    ));
                }
                let g = load_edgelist(path, *directed)?.graph;
                if *scc {
                    largest_scc(&g).0
                } else {
                    g
                }
            }
        };
        match self.lazy() {
            Some(alpha) => lazify(&graph, alpha),
            None => Ok(graph),
        }
    }

    pub fn matrix(&self, size: Option<usize>) -> Result<StochasticMatrix> {
        equal_weight_matrix(&self.build(size)?)
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut kept = Vec::new();
        let mut lazy = None;
        let mut path = None;
        let mut directed = false;
        let mut scc = false;
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
            let bad = || Error::Spec(format!("bad value in '{kv}'"));
            match (head, k.trim()) {
                (_, "lazy") => lazy = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
                ("file", "path") => path = Some(PathBuf::from(v.trim())),
                ("file", "directed") => directed = v.trim().parse().map_err(|_| bad())?,
                ("file", "scc") => scc = v.trim().parse().map_err(|_| bad())?,
                ("file", other) => {
                    return Err(Error::Spec(format!("unknown file parameter '{other}'")))
                }
                _ => kept.push(kv),
            }
        }
        if let Some(a) = lazy {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::Spec(format!("laziness {a} not in [0, 1)")));
            }
        }
        if head == "file" {
            let path = path.ok_or_else(|| Error::Spec("file source needs path=".into()))?;
            return Ok(GraphSource::File {
                path,
                directed,
                largest_scc: scc,
                lazy,
            });
        }
        let spec: TopologySpec = format!("{head}:{}", kept.join(",")).parse()?;
        Ok(GraphSource::Generated { spec, lazy })
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Generated { spec, .. } => write!(f, "{spec}")?,
            GraphSource::File {
                path,
                directed,
                largest_scc,
                ..
            } => write!(
                f,
                "file:path={},directed={directed},scc={largest_scc}",
                path.display()
            )?,
        }
        if let Some(a) = self.lazy() {
            write!(f, ",lazy={a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaPolicy {
    Oblivious,
    Uniform(f64),
    PerAgent(PathBuf),
}

impl LambdaPolicy {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            LambdaPolicy::Oblivious => Ok(vec![1.0; n]),
            LambdaPolicy::Uniform(l) => Ok(vec![*l; n]),
            LambdaPolicy::PerAgent(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut v = Vec::new();
                for (k, t) in text.split_whitespace().enumerate() {
                    v.push(t.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.clone(),
                        line: k + 1,
                        message: format!("bad stubbornness '{t}'"),
                    })?);
                }
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: v.len(),
                    });
                }
                Ok(v)
            }
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("oblivious") {
            return Ok(LambdaPolicy::Oblivious);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(LambdaPolicy::PerAgent(PathBuf::from(path)));
        }
        match s.parse::<f64>() {
            Ok(l) if (0.0..=1.0).contains(&l) => Ok(LambdaPolicy::Uniform(l)),
            _ => Err(Error::Config(format!(
                "lambda must be 'oblivious', a number in [0, 1] or file:<path>, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Size of the agent graph.
    N,
    /// Size of the constraint graph.
    M,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub mixing: bool,
    pub eigen: bool,
    pub coupling: bool,
    pub limits: bool,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            mixing: true,
            eigen: true,
            coupling: true,
            limits: true,
        }
    }
}

impl FromStr for Metrics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(Metrics::default());
        }
        let mut m = Metrics {
            mixing: false,
            eigen: false,
            coupling: false,
            limits: false,
        };
        for name in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match name {
                "mixing" => m.mixing = true,
                "eigen" => m.eigen = true,
                "coupling" => m.coupling = true,
                "limits" => m.limits = true,
                other => return Err(Error::Config(format!("unknown metric '{other}'"))),
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agents: GraphSource,
    pub constraints: GraphSource,
    pub lambda: LambdaPolicy,
    pub sweep: Sweep,
    pub epsilon: f64,
    pub seed: u64,
    pub trials: usize,
    pub step_cap: u64,
    pub max_steps: usize,
    pub metrics: Metrics,
    pub output: Option<PathBuf>,
}

pub const CONFIG_KEYS: [&str; 15] = [
    "agents",
    "constraints",
    "lambda",
    "sweep",
    "sweep_start",
    "sweep_end",
    "sweep_stride",
    "sweep_values",
    "epsilon",
    "seed",
    "trials",
    "step_cap",
    "max_steps",
    "metrics",
    "output",
];

impl ExperimentConfig {
    /// Builds a config from `key = value` pairs (see [`CONFIG_KEYS`]).
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for key in map.keys() {
            if !CONFIG_KEYS.contains(&normalize_key(key).as_str()) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        let get = |k: &str| map.get(k).map(|s| s.trim());
        let need = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing '{k}'")));
        fn num<T: FromStr>(k: &str, v: Option<&str>, default: T) -> Result<T> {
            match v {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value for '{k}': '{v}'"))),
            }
        }
        let variable = match need("sweep")? {
            "n" => SweepVariable::N,
            "m" => SweepVariable::M,
            other => {
                return Err(Error::Config(format!(
                    "sweep must be n or m, got '{other}'"
                )))
            }
        };
        let values = match get("sweep_values") {
            Some(list) => list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad sweep value '{t}'")))
                })
                .collect::<Result<Vec<usize>>>()?,
            None => {
                let start: usize = num("sweep_start", Some(need("sweep_start")?), 0)?;
                let end: usize = num("sweep_end", get("sweep_end"), start)?;
                let stride: usize = num("sweep_stride", get("sweep_stride"), 1)?;
                if stride == 0 {
                    return Err(Error::Config("sweep_stride must be positive".into()));
                }
                (start..=end).step_by(stride).collect()
            }
        };
        let config = ExperimentConfig {
            agents: need("agents")?.parse()?,
            constraints: need("constraints")?.parse()?,
            lambda: get("lambda").unwrap_or("oblivious").parse()?,
            sweep: Sweep { variable, values },
            epsilon: num("epsilon", get("epsilon"), 0.25)?,
            seed: num("seed", get("seed"), 0)?,
            trials: num("trials", get("trials"), 1000)?,
            step_cap: num("step_cap", get("step_cap"), 10_000_000)?,
            max_steps: num("max_steps", get("max_steps"), 10_000_000)?,
            metrics: get("metrics").unwrap_or("all").parse()?,
            output: get("output").map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep range is empty".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon {} not in (0, 1)",
                self.epsilon
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        let swept = match self.sweep.variable {
            SweepVariable::N => &self.agents,
            SweepVariable::M => &self.constraints,
        };
        if matches!(swept, GraphSource::File { .. }) {
            return Err(Error::Config("the swept graph must be generated".into()));
        }
        Ok(())
    }
}

/// One sweep point. Missing values are left empty in the CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentRow {
    pub sweep_value: usize,
    pub n: usize,
    pub m: usize,
    pub converges: Option<bool>,
    pub t_mix: Option<usize>,
    pub lambda2: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub coupling_l: Option<f64>,
    pub coupling_se: Option<f64>,
    pub absorbing_h: Option<f64>,
    pub theorem_bound: Option<f64>,
    pub limit_consensus: Option<f64>,
    pub error: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "sweep_value",
    "n",
    "m",
    "converges",
    "t_mix",
    "lambda2",
    "lower_bound",
    "upper_bound",
    "coupling_L",
    "coupling_se",
    "absorbing_H",
    "theorem_bound",
    "limit_consensus",
    "error",
];

impl ExperimentRow {
    fn record(&mut self, what: &str, err: Error) {
        if !self.error.is_empty() {
            self.error.push_str("; ");
        }
        self.error.push_str(&format!("{what}: {err}"));
    }

    fn fields(&self) -> [String; 14] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        [
            self.sweep_value.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            opt(&self.converges),
            opt(&self.t_mix),
            opt(&self.lambda2),
            opt(&self.lower_bound),
            opt(&self.upper_bound),
            opt(&self.coupling_l),
            opt(&self.coupling_se),
            opt(&self.absorbing_h),
            opt(&self.theorem_bound),
            opt(&self.limit_consensus),
            self.error.clone(),
        ]
    }
}

/// Belief system with initial beliefs drawn uniformly from `[0, 1]`.
pub fn random_system(
    a: StochasticMatrix,
    c: StochasticMatrix,
    lambda: &LambdaPolicy,
    seed: u64,
) -> Result<BeliefSystem> {
    let (n, m) = (a.dim(), c.dim());
    let lambda = lambda.values(n)?;
    let mut rng = stream_rng(seed, 1);
    let x0 = (0..n * m).map(|_| rng.random::<f64>()).collect();
    BeliefSystem::assemble(a, c, lambda, x0)
}

/// Runs every sweep point (in parallel) and returns rows in sweep order.
/// Failures are recorded in the row's `error` field.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    Ok(config
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| run_point(config, idx as u64, value))
        .collect())
}

fn run_point(config: &ExperimentConfig, idx: u64, value: usize) -> ExperimentRow {
    let mut row = ExperimentRow {
        sweep_value: value,
        ..ExperimentRow::default()
    };
    let (na, nc) = match config.sweep.variable {
        SweepVariable::N => (Some(value), None),
        SweepVariable::M => (None, Some(value)),
    };
    let system = config.agents.matrix(na).and_then(|a| {
        let c = config.constraints.matrix(nc)?;
        row.n = a.dim();
        row.m = c.dim();
        random_system(a, c, &config.lambda, derive_seed(config.seed, idx))
    });
    let system = match system {
        Ok(s) => s,
        Err(e) => {
            row.record("build", e);
            return row;
        }
    };
    let verdict = system.converges();
    row.converges = Some(verdict.converges);
    let eps = config.epsilon;

    if config.metrics.mixing && verdict.converges {
        match convergence_time(&system, eps, config.max_steps) {
            Ok(t) => row.t_mix = Some(t),
            Err(e) => row.record("t_mix", e),
        }
    }
    if config.metrics.eigen {
        let (a, c) = (system.influence(), system.constraints());
        if system.is_oblivious() && check_ergodic(a).is_ok() && check_ergodic(c).is_ok() {
            match second_eigenvalue(a).and_then(|la| Ok(la.max(second_eigenvalue(c)?))) {
                Ok(l) => {
                    let b = bounds_from_lambda(l, row.n * row.m, eps);
                    row.lambda2 = Some(l);
                    row.lower_bound = Some(b.lower);
                    row.upper_bound = Some(b.upper);
                }
                Err(e) => row.record("lambda2", e),
            }
        }
    }
    if config.metrics.coupling {
        let opts = CouplingOptions {
            trials: config.trials,
            step_cap: config.step_cap,
            seed: derive_seed(config.seed, idx ^ 0xC0FFEE),
            ..CouplingOptions::default()
        };
        match system_bound(&system, eps, &opts) {
            Ok(b) => {
                let (ga, gc) = (b.agents, b.constraints);
                let (l, se) = if ga.coupling_mean >= gc.coupling_mean {
                    (ga.coupling_mean, ga.coupling_se)
                } else {
                    (gc.coupling_mean, gc.coupling_se)
                };
                row.coupling_l = Some(l);
                row.coupling_se = Some(se);
                row.absorbing_h = Some(ga.absorbing_h.max(gc.absorbing_h));
                row.theorem_bound = Some(b.bound);
            }
            Err(e) => row.record("coupling", e),
        }
    }
    if config.metrics.limits && verdict.converges {
        match structural_limit(&system) {
            Ok(r) => row.limit_consensus = r.consensus(),
            Err(e) => row.record("limits", e),
        }
    }
    row
}

/// Writes the header and rows as RFC-4180 CSV with `\n` line endings.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv` and one log–log SVG per metric into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    rows: &[ExperimentRow],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join("results.csv");
    write_csv(rows, std::fs::File::create(&csv_path)?)?;
    written.push(csv_path);
    let xlabel = match config.sweep.variable {
        SweepVariable::N => "n",
        SweepVariable::M => "m",
    };
    let series: [(&str, fn(&ExperimentRow) -> Option<f64>); 5] = [
        ("t_mix", |r| r.t_mix.map(|t| t as f64)),
        ("upper_bound", |r| r.upper_bound),
        ("coupling_L", |r| r.coupling_l),
        ("absorbing_H", |r| r.absorbing_h),
        ("theorem_bound", |r| r.theorem_bound),
    ];
    for (name, get) in series {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| get(r).map(|y| (r.sweep_value as f64, y)))
            .collect();
        let svg = crate::svg::loglog_plot(&format!("{name} vs {xlabel}"), xlabel, name, &pts);
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Least-squares fit of `log10 y` against `log10 x` over positive points.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    linear_fit(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<ExperimentConfig> {
        let map = crate::netio::parse_config(text, Path::new("cfg"))?;
        ExperimentConfig::from_map(&map)
    }

    const BASE: &str = "agents = cycle:n=5\nconstraints = path:n=3,directed=true\nsweep = n\n";

    #[test]
    fn graph_source_parsing() {
        let g: GraphSource = "cycle:n=7,lazy=0.5".parse().unwrap();
        assert_eq!(g.lazy(), Some(0.5));
        assert_eq!(g.to_string().parse::<GraphSource>().unwrap(), g);
        let f: GraphSource = "file:path=x.txt,directed=true,scc=true".parse().unwrap();
        assert!(matches!(
            f,
            GraphSource::File {
                directed: true,
                largest_scc: true,
                ..
            }
        ));
        assert!("file:directed=true".parse::<GraphSource>().is_err());
        assert!("cycle:n=7,lazy=1.5".parse::<GraphSource>().is_err());
    }

    #[test]
    fn config_validation() {
        let c = config(&format!(
            "{BASE}sweep_start = 5\nsweep_end = 9\nsweep_stride = 2\n"
        ))
        .unwrap();
        assert_eq!(c.sweep.values, vec![5, 7, 9]);
        assert!(config(&format!("{BASE}sweep_values = 5\nepsilon = 1\n")).is_err());
        assert!(config(&format!("{BASE}sweep_start = 9\nsweep_end = 5\n")).is_err());
        assert!(config(&format!("{BASE}sweep_values = 5\nbogus = 1\n")).is_err());
        assert!(config("agents = cycle:n=5\nsweep = n\nsweep_values = 3\n").is_err());
    }

    #[test]
    fn csv_is_deterministic_with_fixed_header() {
        let c = config(&format!(
            "{BASE}sweep_values = 5,7\ntrials = 50\nseed = 3\n"
        ))
        .unwrap();
        let mut a = Vec::new();
        write_csv(&run_experiment(&c).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&run_experiment(&c).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 2);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn failures_become_error_rows() {
        let c = config(
            "agents = cycle:n=5\nconstraints = path:n=3,directed=true\nsweep = n\nsweep_values = 1,5\ntrials = 20\n",
        )
        .unwrap();
        let rows = run_experiment(&c).unwrap();
        assert!(!rows[0].error.is_empty());
        assert!(rows[1].error.is_empty(), "{}", rows[1].error);
        assert!(rows[1].t_mix.is_some() && rows[1].limit_consensus.is_some());
    }

    #[test]
    fn fits() {
        let f = loglog_fit(&[(10.0, 100.0), (100.0, 10_000.0), (1000.0, 1e6)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[(1.0, 1.0)]).is_none());
    }
}
