use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kronmix::belief::{simulate, SimulateOptions};
use kronmix::experiment::{
    random_system, run_experiment, write_outputs, ExperimentConfig, GraphSource, LambdaPolicy,
};
use kronmix::limits::{social_power, structural_limit, stubborn_limit};
use kronmix::mixing::{analyze_chain, eigen_bounds, CouplingOptions, StartPolicy};
use kronmix::netio::{
    download_instructions, largest_scc, load_edgelist, read_config, verify_checksum,
};
use kronmix::stochastic::{check_ergodic, equal_weight_matrix};
use kronmix::{scc_decompose, BeliefSystem, Error, Result};

#[derive(Parser)]
#[command(
    name = "kronmix",
    version,
    about = "Belief systems with logic constraints: convergence, mixing and limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a generated graph as an edge list
    Generate {
        /// Graph source, e.g. `cycle:n=11` or `grid:n=5,k=2,lazy=0.5`
        #[arg(long)]
        spec: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Components and periods of a graph, or the convergence verdict of a system
    Analyze {
        #[arg(long, conflicts_with_all = ["agents", "constraints"])]
        graph: Option<String>,
        #[command(flatten)]
        system: Option<SystemArgs>,
    },
    /// Iterate the belief dynamics
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 1e-10)]
        stop_delta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
    },
    /// Mixing time, spectral bounds, coupling and absorbing times of one chain
    Mixing {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 10_000_000)]
        step_cap: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Limiting beliefs by structure and by fixed-point iteration
    Limits {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
    },
    /// Run a parameter sweep and write CSV and SVG output
    Experiment(ExperimentArgs),
    /// Validate and summarize a downloaded edge list
    Ingest {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        sha256: Option<String>,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Social influence graph source
    #[arg(long)]
    agents: String,
    /// Logic constraint graph source
    #[arg(long)]
    constraints: String,
    /// `oblivious`, a stubbornness in [0, 1], or `file:<path>`
    #[arg(long, default_value = "oblivious")]
    lambda: String,
    /// Seed for the random initial beliefs
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SystemArgs {
    fn build(&self) -> Result<BeliefSystem> {
        let a = self.agents.parse::<GraphSource>()?.matrix(None)?;
        let c = self.constraints.parse::<GraphSource>()?.matrix(None)?;
        random_system(a, c, &self.lambda.parse::<LambdaPolicy>()?, self.seed)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    agents: Option<String>,
    #[arg(long)]
    constraints: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    sweep_start: Option<String>,
    #[arg(long)]
    sweep_end: Option<String>,
    #[arg(long)]
    sweep_stride: Option<String>,
    #[arg(long)]
    sweep_values: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    step_cap: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

impl ExperimentArgs {
    fn to_config(&self) -> Result<ExperimentConfig> {
        let mut map: BTreeMap<String, String> = match &self.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("agents", &self.agents),
            ("constraints", &self.constraints),
            ("lambda", &self.lambda),
            ("sweep", &self.sweep),
            ("sweep_start", &self.sweep_start),
            ("sweep_end", &self.sweep_end),
            ("sweep_stride", &self.sweep_stride),
            ("sweep_values", &self.sweep_values),
            ("epsilon", &self.epsilon),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("step_cap", &self.step_cap),
            ("max_steps", &self.max_steps),
            ("metrics", &self.metrics),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        ExperimentConfig::from_map(&map)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("KRONMIX_THREADS") {
        let threads: usize = v.trim().parse().map_err(|_| {
            Error::Config(format!(
                "KRONMIX_THREADS must be a positive integer, got '{v}'"
            ))
        })?;
        if threads == 0 {
            return Err(Error::Config("KRONMIX_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn print_matrix(out: &mut impl Write, values: &[f64], m: usize) -> Result<()> {
    for row in values.chunks(m) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.10}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Generate { spec, output } => {
            let g = spec.parse::<GraphSource>()?.build(None)?;
            let mut text = format!(
                "# nodes {} edges {} weak_components {}\n",
                g.node_count(),
                g.edge_count(),
                g.weak_component_count()
            );
            for (s, t, w) in g.edges() {
                if g.is_weighted() {
                    text.push_str(&format!("{s} {t} {w}\n"));
                } else {
                    text.push_str(&format!("{s} {t}\n"));
                }
            }
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Analyze { graph, system } => match (graph, system) {
            (Some(src), _) => {
                let g = src.parse::<GraphSource>()?.build(None)?;
                let d = scc_decompose(&g);
                writeln!(out, "nodes {} edges {}", g.node_count(), g.edge_count())?;
                writeln!(out, "components {}", d.component_count())?;
                for c in d.closed_components() {
                    let p = d.period(c);
                    writeln!(
                        out,
                        "closed component {c}: size {} period {}{}",
                        d.component(c).len(),
                        p.value,
                        if p.trivial { " (no cycle)" } else { "" }
                    )?;
                }
            }
            (None, Some(sys)) => {
                let s = sys.build()?;
                let v = s.converges();
                writeln!(
                    out,
                    "agents {} topics {} states {}",
                    s.agents(),
                    s.topics(),
                    s.dim()
                )?;
                writeln!(out, "oblivious agents {}", v.oblivious.len())?;
                writeln!(out, "converges {}", v.converges)?;
                for w in &v.witnesses {
                    writeln!(
                        out,
                        "periodic {:?} component {:?} period {}",
                        w.graph, w.nodes, w.period
                    )?;
                }
            }
            (None, None) => {
                return Err(Error::Config(
                    "analyze needs --graph or --agents and --constraints".into(),
                ))
            }
        },
        Command::Simulate {
            system,
            stop_delta,
            max_iter,
        } => {
            let s = system.build()?;
            let sim = simulate(
                &s,
                &SimulateOptions {
                    stop_delta,
                    max_iter,
                    ..SimulateOptions::default()
                },
            )?;
            writeln!(
                out,
                "iterations {} settled {} last_delta {:e}",
                sim.iterations, sim.settled, sim.last_delta
            )?;
            print_matrix(&mut out, &sim.beliefs, s.topics())?;
        }
        Command::Mixing {
            graph,
            epsilon,
            trials,
            step_cap,
            seed,
        } => {
            let p = graph.parse::<GraphSource>()?.matrix(None)?;
            let policy = StartPolicy {
                seed,
                ..StartPolicy::default()
            };
            let coupling = CouplingOptions {
                trials,
                step_cap,
                seed,
                ..CouplingOptions::default()
            };
            let r = analyze_chain(&p, epsilon, &policy, &coupling)?;
            writeln!(out, "states {}", p.dim())?;
            writeln!(out, "t_mix {}", r.t_mix)?;
            writeln!(out, "lambda2 {}", r.lambda2_abs)?;
            writeln!(out, "lower_bound {}", r.lower_bound)?;
            writeln!(out, "upper_bound {}", r.upper_bound)?;
            writeln!(
                out,
                "coupling_L {} +- {} ({} trials, {} capped)",
                r.coupling.mean, r.coupling.std_err, r.coupling.trials, r.coupling.capped
            )?;
            writeln!(out, "absorbing_H {}", r.absorbing_h)?;
            writeln!(out, "theorem_bound {}", r.theorem_bound)?;
        }
        Command::Limits {
            system,
            tol,
            max_iter,
        } => {
            let s = system.build()?;
            let r = structural_limit(&s)?;
            writeln!(out, "structural limit:")?;
            print_matrix(&mut out, r.beliefs(), s.topics())?;
            match r.consensus() {
                Some(c) => writeln!(out, "consensus {c}")?,
                None => writeln!(out, "consensus none")?,
            }
            match stubborn_limit(&s, tol, max_iter) {
                Ok(x) => {
                    let gap = x
                        .iter()
                        .zip(r.beliefs())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    writeln!(out, "fixed point max difference {gap:e}")?;
                }
                Err(e) => writeln!(out, "fixed point: {e}")?,
            }
            if let Ok(sp) = social_power(s.influence()) {
                writeln!(out, "top 20% social power {:.4}", sp.top_share(0.2))?;
            }
        }
        Command::Experiment(args) => {
            let config = args.to_config()?;
            let rows = run_experiment(&config)?;
            let dir = config
                .output
                .clone()
                .unwrap_or_else(|| PathBuf::from("results"));
            for path in write_outputs(&dir, &config, &rows)? {
                writeln!(out, "wrote {}", path.display())?;
            }
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            writeln!(out, "{} points, {failed} with errors", rows.len())?;
        }
        Command::Ingest {
            path,
            directed,
            sha256,
            epsilon,
        } => {
            if !path.exists() {
                let dir = path.parent().map(|p| p.to_path_buf()).unwrap_or_default();
                eprint!("{}", download_instructions(&dir));
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("{} not found", path.display()),
                )));
            }
            if let Some(hex) = sha256 {
                verify_checksum(&path, &hex)?;
                writeln!(out, "checksum ok")?;
            }
            let e = load_edgelist(&path, directed)?;
            writeln!(
                out,
                "raw nodes {} edges {}",
                e.graph.node_count(),
                e.graph.edge_count()
            )?;
            let (g, _) = largest_scc(&e.graph);
            writeln!(
                out,
                "largest scc nodes {} edges {}",
                g.node_count(),
                g.edge_count()
            )?;
            let p = equal_weight_matrix(&g)?;
            match check_ergodic(&p) {
                Ok(()) => {
                    let b = eigen_bounds(&p, epsilon)?;
                    writeln!(out, "lambda2 {}", b.lambda2_abs)?;
                    writeln!(out, "upper_bound {:.1}", b.upper)?;
                    let sp = social_power(&p)?;
                    writeln!(out, "top 20% social power {:.4}", sp.top_share(0.2))?;
                }
                Err(err) => writeln!(out, "spectral bounds skipped: {err}")?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
