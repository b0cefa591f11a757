//! Monte Carlo drivers: finite-size percolation probes, good-event
//! frequencies, critical-parameter bisection and resumable sweeps.
//!
//! Every trial `i` under master seed `s` draws its graph from
//! [`graph_stream`]`(s, i)` and one uniform per vertex from
//! [`weight_stream`]`(s, i)`. Weights are monotone functions of those
//! uniforms, so runs at different parameter values with the same seed are
//! coupled: instance by instance, weights are ordered like the parameter.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cmp::{compute_partition, explore_stabiliser_of_set, CmpConfig, ExploreOutcome};
use crate::generators::{
    bernoulli_from, build_box, graph_stream, model_weights, uniforms, weight_stream, BoxGraph, GenError, GraphKind,
    Model, ModelSpec, Weights,
};
use crate::graph::{ball_int, Graph, WeightedGraph};
use crate::scalar::{Exponent, Weight};
use crate::stats::{Moments, Proportion};

/// Graph radius of the window around the box centre whose stabiliser is
/// explored by the escape observable.
pub const WINDOW_RADIUS: u64 = 1;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(
        "frequency at the bracket ends does not straddle 1/2 at size {size}: \
         {lo_value} -> {lo_freq:.3}, {hi_value} -> {hi_freq:.3}"
    )]
    NotBracketed { size: f64, lo_value: f64, lo_freq: f64, hi_value: f64, hi_freq: f64 },
    #[error("frequency profile at size {size} is not monotone beyond noise between {a} and {b}")]
    NonMonotone { size: f64, a: f64, b: f64 },
    #[error("{path} belongs to a different sweep configuration; remove it or drop --resume")]
    ManifestMismatch { path: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExpError + '_ {
    move |source| ExpError::Io { path: path.to_path_buf(), source }
}

/// Finite-size observables of one instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// The stabiliser of the window around the centre reached the boundary
    /// band or exceeded the box volume.
    pub escape: bool,
    /// Ended by the volume budget rather than by stability or the boundary.
    pub censored: bool,
    /// Some cluster of the box meets both face slabs.
    pub spanning: Option<bool>,
    /// Largest cluster size over the number of vertices.
    pub largest_fraction: Option<f64>,
}

impl TrialOutcome {
    const EMPTY: TrialOutcome = TrialOutcome { escape: false, censored: false, spanning: None, largest_fraction: None };
}

fn observe<W: Weight>(bx: &BoxGraph, wg: &WeightedGraph<W>, cfg: &CmpConfig, partition: bool) -> TrialOutcome {
    let g = wg.graph();
    let n = g.n();
    let Some(centre) = bx.centre else {
        let empty = partition.then_some(false);
        return TrialOutcome { spanning: empty, largest_fraction: partition.then_some(0.0), ..TrialOutcome::EMPTY };
    };
    let window = ball_int(g, [centre], WINDOW_RADIUS);
    let ex = explore_stabiliser_of_set(wg, window.as_slice(), cfg, n, Some(&bx.boundary));
    let mut out = TrialOutcome {
        escape: ex.outcome != ExploreOutcome::Stable,
        censored: ex.outcome == ExploreOutcome::BudgetExceeded,
        ..TrialOutcome::EMPTY
    };
    if partition {
        let res = compute_partition(wg, cfg);
        out.spanning = Some(res.clusters.iter().any(|c| {
            c.members.iter().any(|&v| bx.low_face[v as usize]) && c.members.iter().any(|&v| bx.high_face[v as usize])
        }));
        let largest = res.clusters.iter().map(|c| c.members.len()).max().unwrap_or(0);
        out.largest_fraction = Some(largest as f64 / n as f64);
    }
    out
}

/// Builds trial `trial` of `model` on `graph` and measures it.
pub fn probe_trial(
    model: &Model,
    graph: &GraphKind,
    alpha: &Exponent,
    seed: u64,
    trial: u64,
    partition: bool,
) -> Result<TrialOutcome, ExpError> {
    let bx = build_box(graph, &mut graph_stream(seed, trial))?;
    let u = uniforms(bx.graph.n(), &mut weight_stream(seed, trial));
    let cfg = CmpConfig::new(*alpha);
    let g: Arc<Graph> = bx.graph.clone();
    Ok(match model_weights(&g, model, &u) {
        Weights::Int(w) => observe(&bx, &WeightedGraph::new(g, w).map_err(GenError::from)?, &cfg, partition),
        Weights::Float(w) => observe(&bx, &WeightedGraph::new(g, w).map_err(GenError::from)?, &cfg, partition),
    })
}

/// Aggregated frequencies at one parameter value and size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub model: String,
    pub graph_kind: String,
    pub alpha: Exponent,
    pub param_name: String,
    pub param_value: f64,
    pub size: f64,
    pub trials: u64,
    pub seed: u64,
    pub escape: Proportion,
    pub spanning: Option<Proportion>,
    pub mean_largest_fraction: Option<f64>,
    pub censoring_rate: f64,
    pub ci_method: &'static str,
}

impl ProbeResult {
    /// `(event, frequency)` pairs in CSV order.
    pub fn events(&self) -> Vec<(&'static str, Proportion)> {
        let mut v = vec![("escape", self.escape)];
        if let Some(s) = self.spanning {
            v.push(("spanning", s));
        }
        v
    }
}

/// Escape and (when `partition` is set) spanning frequencies of `spec` at
/// linear size `size`, over trials `0..trials` of `spec.seed`.
pub fn spanning_probe(
    spec: &ModelSpec,
    alpha: &Exponent,
    size: f64,
    trials: u64,
    partition: bool,
) -> Result<ProbeResult, ExpError> {
    spec.model.validate()?;
    let graph = spec.graph.with_size(size);
    graph.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| probe_trial(&spec.model, &graph, alpha, spec.seed, t, partition))
        .collect::<Result<_, _>>()?;
    let count = |f: &dyn Fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    let (param_name, param_value) = spec.model.parameter();
    Ok(ProbeResult {
        model: spec.model.name().to_string(),
        graph_kind: graph.name(),
        alpha: *alpha,
        param_name: param_name.to_string(),
        param_value,
        size,
        trials,
        seed: spec.seed,
        escape: Proportion::new(count(&|o| o.escape), trials),
        spanning: partition.then(|| Proportion::new(count(&|o| o.spanning == Some(true)), trials)),
        mean_largest_fraction: partition
            .then(|| outcomes.iter().filter_map(|o| o.largest_fraction).collect::<Moments>().mean()),
        censoring_rate: count(&|o| o.censored) as f64 / trials.max(1) as f64,
        ci_method: "wilson",
    })
}

/// Frequency of "the partition of the interval `{0, ..., n}` under
/// Bernoulli(`p`) weights has a cluster with at least `gamma * n` members".
pub fn good_event_prob(n: u64, gamma: f64, p: f64, alpha: &Exponent, trials: u64, seed: u64) -> Result<Proportion, ExpError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ExpError::Config(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Model::Bernoulli { p }.validate()?;
    let g = Arc::new(Graph::path(n as usize + 1));
    let cfg = CmpConfig::new(*alpha);
    let need = gamma * n as f64;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = uniforms(g.n(), &mut weight_stream(seed, t));
            let wg = WeightedGraph::new(g.clone(), bernoulli_from(&u, p)).expect("weights match the path");
            let res = compute_partition(&wg, &cfg);
            res.clusters.iter().any(|c| c.members.len() as f64 >= need)
        })
        .filter(|&h| h)
        .count() as u64;
    Ok(Proportion::new(hits, trials))
}

/// Observable whose 1/2-crossing defines the critical parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Escape,
    Spanning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcConfig {
    /// Model, graph family and master seed; the parameter and size are overridden.
    pub base: ModelSpec,
    pub alpha: Exponent,
    pub sizes: Vec<f64>,
    pub trials: u64,
    pub tol: f64,
    /// Initial bracket for the free parameter.
    pub bracket: (f64, f64),
    pub observable: Observable,
}

impl PcConfig {
    /// Default bracket of the model's parameter: `[1/2, 1]` for Bernoulli
    /// weights, `[0, 8]` for continuum weights and `[1, 64]` for degrees.
    pub fn default_bracket(model: &Model) -> (f64, f64) {
        match model {
            Model::Bernoulli { .. } => (0.5, 1.0),
            Model::Continuum { .. } => (0.0, 8.0),
            Model::Degree { .. } => (1.0, 64.0),
        }
    }

    fn validate(&self) -> Result<(), ExpError> {
        let (lo, hi) = self.bracket;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(ExpError::Config(format!("bracket [{lo}, {hi}] is empty")));
        }
        if !(self.tol > 0.0) {
            return Err(ExpError::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.sizes.is_empty() || self.trials == 0 {
            return Err(ExpError::Config("need at least one size and one trial".into()));
        }
        self.base.model.with_parameter(lo).validate()?;
        self.base.model.with_parameter(hi).validate()?;
        Ok(())
    }
}

/// Bisection record at one size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeCrossing {
    pub size: f64,
    pub lower: f64,
    pub upper: f64,
    /// Every evaluated `(parameter, frequency)`, sorted by parameter.
    pub points: Vec<(f64, Proportion)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcEstimate {
    pub param_name: String,
    /// Bracket at the largest size.
    pub lower: f64,
    pub upper: f64,
    pub sizes: Vec<f64>,
    pub trials: u64,
    pub tol: f64,
    pub observable: Observable,
    pub per_size: Vec<SizeCrossing>,
}

impl PcEstimate {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Bisection for the 1/2-crossing of the observable, separately at each
/// size, with common random numbers across parameter values.
pub fn estimate_pc(cfg: &PcConfig) -> Result<PcEstimate, ExpError> {
    cfg.validate()?;
    // Degree thresholds make the event rarer as they grow.
    let increasing = !matches!(cfg.base.model, Model::Degree { .. });
    let integer = matches!(cfg.base.model, Model::Degree { .. });
    let partition = cfg.observable == Observable::Spanning;
    let mut per_size = Vec::new();
    for &size in &cfg.sizes {
        let freq_at = |value: f64| -> Result<Proportion, ExpError> {
            let spec = ModelSpec { model: cfg.base.model.with_parameter(value), ..cfg.base };
            let r = spanning_probe(&spec, &cfg.alpha, size, cfg.trials, partition)?;
            Ok(match cfg.observable {
                Observable::Escape => r.escape,
                Observable::Spanning => r.spanning.expect("partition computed"),
            })
        };
        let (mut lo, mut hi) = cfg.bracket;
        let (f_lo, f_hi) = (freq_at(lo)?, freq_at(hi)?);
        let mut points = vec![(lo, f_lo), (hi, f_hi)];
        let (below, above) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
        if below.freq >= 0.5 || above.freq < 0.5 {
            return Err(ExpError::NotBracketed {
                size,
                lo_value: lo,
                lo_freq: f_lo.freq,
                hi_value: hi,
                hi_freq: f_hi.freq,
            });
        }
        while hi - lo > if integer { cfg.tol.max(1.0) } else { cfg.tol } {
            let mid = if integer { ((lo + hi) / 2.0).floor() } else { 0.5 * (lo + hi) };
            let f = freq_at(mid)?;
            points.push((mid, f));
            if (f.freq >= 0.5) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                let broken = if increasing { a.1.ci_lo > b.1.ci_hi } else { a.1.ci_hi < b.1.ci_lo };
                if broken {
                    return Err(ExpError::NonMonotone { size, a: a.0, b: b.0 });
                }
            }
        }
        per_size.push(SizeCrossing { size, lower: lo, upper: hi, points });
    }
    let last = per_size.last().expect("sizes is non-empty");
    Ok(PcEstimate {
        param_name: cfg.base.model.parameter().0.to_string(),
        lower: last.lower,
        upper: last.upper,
        sizes: cfg.sizes.clone(),
        trials: cfg.trials,
        tol: cfg.tol,
        observable: cfg.observable,
        per_size,
    })
}

/// A grid over exponents, parameter values and sizes. Every grid point
/// uses the master seed `base.seed`, so the points are coupled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ModelSpec,
    pub alphas: Vec<Exponent>,
    pub values: Vec<f64>,
    pub sizes: Vec<f64>,
    pub trials: u64,
    /// Also compute the spanning event (needs the full partition).
    #[serde(default)]
    pub spanning: bool,
}

impl SweepConfig {
    /// Grid points in output order: alpha-major, then value, then size.
    pub fn grid(&self) -> Vec<(Exponent, f64, f64)> {
        let mut g = Vec::new();
        for &a in &self.alphas {
            for &v in &self.values {
                for &s in &self.sizes {
                    g.push((a, v, s));
                }
            }
        }
        g
    }

    /// Hash of the canonical JSON of this configuration, computed like a git
    /// blob id but with SHA-256.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_vec(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(&body);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "model",
    "graph_kind",
    "alpha",
    "param_name",
    "param_value",
    "size",
    "trials",
    "event",
    "freq",
    "ci_lo",
    "ci_hi",
    "seed",
];

/// CSV records of one probe, one per event.
pub fn csv_records(r: &ProbeResult) -> Vec<[String; 12]> {
    r.events()
        .into_iter()
        .map(|(event, p)| {
            [
                r.model.clone(),
                r.graph_kind.clone(),
                r.alpha.to_string(),
                r.param_name.clone(),
                r.param_value.to_string(),
                r.size.to_string(),
                r.trials.to_string(),
                event.to_string(),
                p.freq.to_string(),
                p.ci_lo.to_string(),
                p.ci_hi.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect()
}

/// Probe at one grid point.
pub fn sweep_point(cfg: &SweepConfig, point: (Exponent, f64, f64)) -> Result<ProbeResult, ExpError> {
    let (alpha, value, size) = point;
    let spec = ModelSpec { model: cfg.base.model.with_parameter(value), ..cfg.base };
    spanning_probe(&spec, &alpha, size, cfg.trials, cfg.spanning)
}

/// Summary written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub config: SweepConfig,
    pub input_hash: String,
    pub csv: PathBuf,
    pub points: usize,
    pub rows: usize,
    pub resumed_from: usize,
    pub results: Vec<ProbeResult>,
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Path of the completed-point manifest for `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    sidecar(out, ".manifest")
}

/// Path of the JSON summary for `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    sidecar(out, ".summary.json")
}

/// Runs the sweep, writing the CSV to `out` point by point.
///
/// The manifest records, after each finished point, its index and the CSV
/// length at that moment. With `resume`, a CSV cut short by an interruption
/// is truncated to the last recorded length and the sweep continues from the
/// next point, which reproduces the uninterrupted file byte for byte.
pub fn sweep(cfg: &SweepConfig, out: &Path, resume: bool) -> Result<SweepSummary, ExpError> {
    cfg.base.model.validate()?;
    for &v in &cfg.values {
        cfg.base.model.with_parameter(v).validate()?;
    }
    for &s in &cfg.sizes {
        cfg.base.graph.with_size(s).validate()?;
    }
    let hash = cfg.content_hash();
    let grid = cfg.grid();
    let man_path = manifest_path(out);

    let mut done = 0usize;
    let mut keep_len = None;
    if resume && man_path.exists() && out.exists() {
        let f = File::open(&man_path).map_err(io_err(&man_path))?;
        let mut lines = BufReader::new(f).lines();
        let first = lines.next().transpose().map_err(io_err(&man_path))?;
        if first.as_deref() != Some(hash.as_str()) {
            return Err(ExpError::ManifestMismatch { path: man_path });
        }
        for line in lines {
            let line = line.map_err(io_err(&man_path))?;
            let mut it = line.split_whitespace().map(str::parse::<u64>);
            if let (Some(Ok(i)), Some(Ok(len))) = (it.next(), it.next()) {
                done = i as usize + 1;
                keep_len = Some(len);
            }
        }
    }

    let mut manifest;
    let mut csv_file;
    match keep_len {
        Some(len) => {
            csv_file = OpenOptions::new().write(true).open(out).map_err(io_err(out))?;
            csv_file.set_len(len).map_err(io_err(out))?;
            drop(csv_file);
            csv_file = OpenOptions::new().append(true).open(out).map_err(io_err(out))?;
            manifest = OpenOptions::new().append(true).open(&man_path).map_err(io_err(&man_path))?;
        }
        None => {
            done = 0;
            csv_file = File::create(out).map_err(io_err(out))?;
            let mut w = csv::Writer::from_writer(&mut csv_file);
            w.write_record(CSV_HEADER).map_err(|source| ExpError::Csv { path: out.to_path_buf(), source })?;
            w.flush().map_err(io_err(out))?;
            drop(w);
            manifest = File::create(&man_path).map_err(io_err(&man_path))?;
            writeln!(manifest, "{hash}").map_err(io_err(&man_path))?;
        }
    }

    let mut results = Vec::with_capacity(grid.len());
    for (i, &point) in grid.iter().enumerate() {
        let r = sweep_point(cfg, point)?;
        if i >= done {
            let mut w = csv::Writer::from_writer(&mut csv_file);
            for rec in csv_records(&r) {
                w.write_record(&rec).map_err(|source| ExpError::Csv { path: out.to_path_buf(), source })?;
            }
            w.flush().map_err(io_err(out))?;
            drop(w);
            csv_file.sync_data().map_err(io_err(out))?;
            let len = fs::metadata(out).map_err(io_err(out))?.len();
            writeln!(manifest, "{i} {len}").map_err(io_err(&man_path))?;
        }
        results.push(r);
    }

    let summary = SweepSummary {
        config: cfg.clone(),
        input_hash: hash,
        csv: out.to_path_buf(),
        points: grid.len(),
        rows: results.iter().map(|r| r.events().len()).sum(),
        resumed_from: done,
        results,
    };
    let sp = summary_path(out);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&sp, json).map_err(io_err(&sp))?;
    Ok(summary)
}
