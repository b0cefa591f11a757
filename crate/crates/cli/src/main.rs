use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use cmperc_core::cmp::{
    compute_cmp, explore_stabiliser, is_stable_with, CmpConfig, ExploreOutcome, Metric, StableConfig,
};
use cmperc_core::contact::{self, ContactConfig, ContactError};
use cmperc_core::experiments::{self, Observable, PcConfig, SweepConfig};
use cmperc_core::generators::{generate, GraphKind, Model, ModelSpec, Weights, ZDist};
use cmperc_core::graph::{Graph, Vertex, VertexSet, WeightedGraph};
use cmperc_core::rng::StreamRng;
use cmperc_core::scalar::{Exponent, Weight};
use cmperc_core::{verify, wgraph};

mod config;

const SUBCOMMANDS: [&str; 9] =
    ["gen", "cmp", "explore", "stable-check", "contact", "duality-test", "sweep", "estimate-pc", "verify"];

#[derive(Parser, Debug)]
#[command(name = "cmperc", version, about = "Cumulative merging partitions, stabilisers and contact processes")]
struct Cli {
    /// JSON object whose keys are flag names; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial parallelism.
    #[arg(long, global = true, env = "CMPERC_THREADS")]
    threads: Option<usize>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a weighted graph and write it as wgraph.
    Gen(GenArgs),
    /// Compute the cumulative merging partition of a wgraph file.
    Cmp(CmpArgs),
    /// Explore the stabiliser of a vertex.
    Explore(ExploreArgs),
    /// Test whether a vertex set is stable.
    StableCheck(StableArgs),
    /// Simulate the contact process and write one CSV row per trial.
    Contact(ContactArgs),
    /// Estimate both sides of the self-duality relation.
    DualityTest(DualityArgs),
    /// Probe a grid of parameters and sizes, writing CSV.
    Sweep(SweepArgs),
    /// Bisect for the critical parameter.
    EstimatePc(PcArgs),
    /// Run the invariant battery on generated instances.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelName {
    Bernoulli,
    Continuum,
    Degree,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphName {
    Z1,
    Z2,
    Z3,
    Rgg1,
    Rgg2,
    Rgg3,
    Delaunay,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "bernoulli")]
    model: ModelName,
    #[arg(long, value_enum, default_value = "z1")]
    graph: GraphName,
    /// Linear size of the box (lattice side or continuum side length).
    #[arg(long, default_value_t = 100.0)]
    size: f64,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<u64>,
    /// Law of Z for continuum weights: constant, exponential or pareto:<a>.
    #[arg(long, default_value = "exponential")]
    z: String,
    /// Connection radius of random geometric graphs.
    #[arg(long, default_value_t = 1.5)]
    radius: f64,
    /// Intensity of the Poisson point process.
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
}

impl ModelArgs {
    fn graph_kind(&self) -> GraphKind {
        let side = self.size;
        let lattice = |dim| GraphKind::Lattice { dim, side: side.round().max(1.0) as usize };
        let rgg = |dim| GraphKind::Rgg { dim, side, radius: self.radius, intensity: self.intensity };
        match self.graph {
            GraphName::Z1 => lattice(1),
            GraphName::Z2 => lattice(2),
            GraphName::Z3 => lattice(3),
            GraphName::Rgg1 => rgg(1),
            GraphName::Rgg2 => rgg(2),
            GraphName::Rgg3 => rgg(3),
            GraphName::Delaunay => GraphKind::Delaunay { side, intensity: self.intensity },
        }
    }

    /// The model; its free parameter may be left out when `fallback` is given.
    fn model(&self, fallback: Option<f64>) -> Result<Model> {
        let need = |v: Option<f64>, flag: &str| {
            v.or(fallback).with_context(|| format!("the {flag} flag is required for this model"))
        };
        let m = match self.model {
            ModelName::Bernoulli => Model::Bernoulli { p: need(self.p, "--p")? },
            ModelName::Continuum => {
                let z: ZDist = self.z.parse()?;
                Model::Continuum { lambda: need(self.lambda, "--lambda")?, z }
            }
            ModelName::Degree => {
                Model::Degree { delta: self.delta.map(|d| d as f64).or(fallback).context("the --delta flag is required")? as u64 }
            }
        };
        m.validate()?;
        Ok(m)
    }

    fn spec(&self, seed: u64, fallback: Option<f64>) -> Result<ModelSpec> {
        let graph = self.graph_kind();
        graph.validate()?;
        Ok(ModelSpec { model: self.model(fallback)?, graph, seed })
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Arith {
    /// Integers when every weight is an integer, otherwise f64.
    Auto,
    /// Arbitrary-precision rationals.
    Exact,
    /// f64 throughout.
    Float,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct InputArgs {
    /// wgraph file.
    input: PathBuf,
    #[arg(long, default_value = "1")]
    alpha: Exponent,
    #[arg(long, value_enum, default_value = "auto")]
    arith: Arith,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct CmpArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ExploreArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    vertex: Vertex,
    /// Largest explored set before giving up (default: all vertices).
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct StableArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated vertex ids.
    #[arg(long, value_delimiter = ',', required = true)]
    set: Vec<Vertex>,
    /// Merge clusters with distances of the whole graph instead of the subgraph.
    #[arg(long)]
    ambient_partition: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ContactArgs {
    /// wgraph file; weights are ignored.
    input: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    /// Initially infected vertices (default: all of the restriction set).
    #[arg(long, value_delimiter = ',')]
    initial: Option<Vec<Vertex>>,
    /// Restriction set (default: every vertex).
    #[arg(long, value_delimiter = ',')]
    restrict: Option<Vec<Vertex>>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Event cap per run.
    #[arg(long, default_value_t = contact::DEFAULT_MAX_EVENTS)]
    budget: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DualityArgs {
    /// wgraph file; weights are ignored.
    input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    a: Vec<Vertex>,
    #[arg(long, value_delimiter = ',', required = true)]
    b: Vec<Vertex>,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    alpha: Vec<Exponent>,
    /// Values of the free parameter.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Also measure spanning clusters.
    #[arg(long)]
    spanning: bool,
    /// Continue an interrupted sweep from its manifest.
    #[arg(long)]
    resume: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObservableName {
    Escape,
    Spanning,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PcArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "1")]
    alpha: Exponent,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    sizes: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Initial bracket `lo,hi` (default depends on the model).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    bracket: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "escape")]
    observable: ObservableName,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    instances: u64,
    /// Also check interval duality on every 0/1 word up to this length.
    #[arg(long, default_value_t = 12)]
    duality_length: usize,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Budget(String),
    Other(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.into())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    emit(out, &s)
}

fn read_raw(path: &Path) -> Result<wgraph::RawWgraph> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    wgraph::parse_raw(&text).with_context(|| format!("{} is not a valid wgraph file", path.display()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    Ok(read_raw(path)?.graph)
}

fn vertex_set(g: &Graph, ids: &[Vertex]) -> Result<VertexSet> {
    let s: VertexSet = ids.iter().copied().collect();
    s.check(g.n())?;
    Ok(s)
}

/// Runs `f` with weights parsed in the arithmetic selected by `arith`.
macro_rules! with_weights {
    ($input:expr, |$g:ident| $body:expr) => {{
        let raw = read_raw(&$input.input)?;
        match ($input.arith, raw.integral()) {
            (Arith::Exact, _) => {
                let $g: WeightedGraph<BigRational> = raw.into_weighted()?;
                $body
            }
            (Arith::Auto, true) => {
                let $g: WeightedGraph<u64> = raw.into_weighted()?;
                $body
            }
            _ => {
                let $g: WeightedGraph<f64> = raw.into_weighted()?;
                $body
            }
        }
    }};
}

fn explore_json<W: Weight>(g: &WeightedGraph<W>, args: &ExploreArgs) -> Result<(Value, bool)> {
    g.graph().check_vertex(args.vertex)?;
    let cfg = CmpConfig::new(args.input.alpha);
    let budget = args.budget.unwrap_or(g.n());
    let ex = explore_stabiliser(g, args.vertex, &cfg, budget, None);
    let outcome = match ex.outcome {
        ExploreOutcome::Stable => "stable",
        ExploreOutcome::BudgetExceeded => "budget_exceeded",
        ExploreOutcome::Stopped => "stopped",
    };
    let v = json!({
        "vertex": args.vertex,
        "alpha": args.input.alpha,
        "outcome": outcome,
        "stabiliser": ex.stabiliser.as_slice(),
        "size": ex.stabiliser.len(),
        "rounds": ex.rounds,
        "partition": ex.local.to_json(),
    });
    Ok((v, ex.outcome == ExploreOutcome::BudgetExceeded))
}

fn stable_json<W: Weight>(g: &WeightedGraph<W>, args: &StableArgs) -> Result<Value> {
    let set = vertex_set(g.graph(), &args.set)?;
    let metric = if args.ambient_partition { Metric::Ambient } else { Metric::Induced };
    let stable = is_stable_with(g, &set, &CmpConfig::new(args.input.alpha), &StableConfig { partition_metric: metric });
    Ok(json!({ "alpha": args.input.alpha, "set": set.as_slice(), "stable": stable }))
}

fn gen(args: &GenArgs, cli: &Cli) -> Result<()> {
    let spec = args.model.spec(cli.seed, None)?;
    let (bx, weights) = generate(&spec)?;
    let text = match weights {
        Weights::Int(w) => wgraph::write(&WeightedGraph::new(bx.graph, w)?),
        Weights::Float(w) => wgraph::write(&WeightedGraph::new(bx.graph, w)?),
    };
    emit(cli.out.as_deref(), &text)
}

fn run_contact(args: &ContactArgs, cli: &Cli) -> Result<(), Failure> {
    let g = read_graph(&args.input)?;
    let all: Vec<Vertex> = (0..g.n() as Vertex).collect();
    let w = vertex_set(&g, args.restrict.as_deref().unwrap_or(&all))?;
    let a = match &args.initial {
        Some(ids) => vertex_set(&g, ids)?,
        None => w.clone(),
    };
    let cfg = ContactConfig::new(args.lambda, args.horizon)?.with_max_events(args.budget);
    let runs = match contact::run_trials(&g, &w, &a, &cfg, cli.seed, args.trials) {
        Err(e @ ContactError::BlowUp { .. }) => return Err(Failure::Budget(e.to_string())),
        r => r?,
    };
    let mut text = String::from("seed,extinction_time,censored,total_infections,exit_count\n");
    for (i, r) in runs.iter().enumerate() {
        let key = StreamRng::for_trial(cli.seed, i as u64).key();
        let time = r.truncated_time(args.horizon);
        text.push_str(&format!("{key},{time},{},{},{}\n", r.censored(), r.total_infections, r.exit_count()));
    }
    emit(cli.out.as_deref(), &text)?;
    Ok(())
}

fn duality(args: &DualityArgs, cli: &Cli) -> Result<()> {
    let g = read_graph(&args.input)?;
    let a = vertex_set(&g, &args.a)?;
    let b = vertex_set(&g, &args.b)?;
    let d = contact::duality_estimate(&g, &a, &b, args.t, args.lambda, args.trials, cli.seed)?;
    emit_json(
        cli.out.as_deref(),
        &json!({
            "t": args.t,
            "lambda": args.lambda,
            "trials": args.trials,
            "forward": d.forward,
            "backward": d.backward,
            "consistent": d.consistent(),
        }),
    )
}

fn sweep(args: &SweepArgs, cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref().context("sweep needs --out for its CSV file")?;
    let base = args.model.spec(cli.seed, args.values.first().copied().or(Some(0.0)))?;
    let cfg = SweepConfig {
        base,
        alphas: args.alpha.clone(),
        values: args.values.clone(),
        sizes: args.sizes.clone(),
        trials: args.trials,
        spanning: args.spanning,
    };
    let summary = experiments::sweep(&cfg, out, args.resume)?;
    eprintln!(
        "{} points, {} rows written to {} (summary {})",
        summary.points,
        summary.rows,
        out.display(),
        experiments::summary_path(out).display()
    );
    Ok(())
}

fn estimate_pc(args: &PcArgs, cli: &Cli) -> Result<()> {
    let base = args.model.spec(cli.seed, Some(0.0))?;
    let bracket = match &args.bracket {
        Some(b) => (b[0], b[1]),
        None => PcConfig::default_bracket(&base.model),
    };
    let cfg = PcConfig {
        base,
        alpha: args.alpha,
        sizes: args.sizes.clone(),
        trials: args.trials,
        tol: args.tol,
        bracket,
        observable: match args.observable {
            ObservableName::Escape => Observable::Escape,
            ObservableName::Spanning => Observable::Spanning,
        },
    };
    let est = experiments::estimate_pc(&cfg)?;
    let mut v = serde_json::to_value(&est)?;
    v["estimate"] = json!(est.estimate());
    v["seed"] = json!(cli.seed);
    emit_json(cli.out.as_deref(), &v)
}

fn run_verify(args: &VerifyArgs, cli: &Cli) -> Result<bool> {
    let rep = verify::run_battery(cli.seed, args.instances);
    let mut words = 0u64;
    let mut violations = Vec::new();
    for len in 1..=args.duality_length {
        for mask in 0u64..(1 << len) {
            let bits: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
            if let Some(ok) = verify::interval_duality(&bits) {
                words += 1;
                if !ok {
                    violations.push(bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>());
                }
            }
        }
    }
    let passed = rep.passed() && violations.is_empty();
    emit_json(
        cli.out.as_deref(),
        &json!({
            "passed": passed,
            "battery": rep,
            "duality": { "max_length": args.duality_length, "applicable_words": words, "violations": violations },
        }),
    )?;
    Ok(passed)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow::anyhow!("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure the thread pool")?;
    }
    let out = cli.out.as_deref();
    match &cli.cmd {
        Command::Gen(a) => gen(a, cli)?,
        Command::Cmp(a) => {
            let cfg = CmpConfig::new(a.input.alpha);
            with_weights!(a.input, |g| emit_json(out, &compute_cmp(&g, &cfg).to_json())?)
        }
        Command::Explore(a) => {
            let (v, over) = with_weights!(a.input, |g| explore_json(&g, a)?);
            emit_json(out, &v)?;
            if over {
                return Err(Failure::Budget(format!("exploration from vertex {} exceeded the budget", a.vertex)));
            }
        }
        Command::StableCheck(a) => {
            let v = with_weights!(a.input, |g| stable_json(&g, a)?);
            emit_json(out, &v)?;
        }
        Command::Contact(a) => run_contact(a, cli)?,
        Command::DualityTest(a) => duality(a, cli)?,
        Command::Sweep(a) => sweep(a, cli)?,
        Command::EstimatePc(a) => estimate_pc(a, cli)?,
        Command::Verify(a) => {
            if !run_verify(a, cli)? {
                return Err(anyhow::anyhow!("invariant battery reported failures").into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Budget(msg)) => {
            eprintln!("budget exceeded: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
