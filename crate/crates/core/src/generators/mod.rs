//! Random weighted graphs: lattice boxes, random geometric graphs and planar
//! Delaunay triangulations, with Bernoulli, continuum or degree weights.
//!
//! Weights are functions of one uniform per vertex, so instances built from
//! the same uniforms are coupled monotonically in the model parameter.

pub mod delaunay;
pub mod predicates;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Coords, Graph, GraphError, Vertex, WeightedGraph};
use crate::rng::{derive, StreamRng};

pub use delaunay::{triangulate, DelaunayError, Triangulation};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("parameter {name} = {value} is out of range ({expect})")]
    Range { name: &'static str, value: f64, expect: &'static str },
    #[error("box with {0} vertices is too large")]
    TooLarge(u128),
    #[error("unknown {what} '{text}'")]
    Unknown { what: &'static str, text: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
}

fn check(name: &'static str, value: f64, ok: bool, expect: &'static str) -> Result<(), GenError> {
    if ok {
        Ok(())
    } else {
        Err(GenError::Range { name, value, expect })
    }
}

/// Law of `Z` in continuum weights `lambda * Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ZDist {
    Constant,
    /// Exponential with mean 1.
    Exponential,
    /// Pareto with scale 1 and tail index `a`: `P(Z > z) = z^-a` for `z >= 1`.
    Pareto { a: f64 },
}

impl ZDist {
    /// Inverse distribution function at `u` in `[0, 1)`; non-decreasing in `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ZDist::Constant => 1.0,
            ZDist::Exponential => -(1.0 - u).ln(),
            ZDist::Pareto { a } => (1.0 - u).powf(-1.0 / a),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if let ZDist::Pareto { a } = *self {
            check("pareto tail index", a, a > 0.0 && a.is_finite(), "a > 0")?;
        }
        Ok(())
    }
}

impl fmt::Display for ZDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZDist::Constant => write!(f, "constant"),
            ZDist::Exponential => write!(f, "exponential"),
            ZDist::Pareto { a } => write!(f, "pareto:{a}"),
        }
    }
}

impl FromStr for ZDist {
    type Err = GenError;

    /// `constant`, `exponential` or `pareto:<a>`.
    fn from_str(s: &str) -> Result<Self, GenError> {
        let unknown = || GenError::Unknown { what: "distribution", text: s.to_string() };
        let z = match s.trim() {
            "constant" => ZDist::Constant,
            "exponential" | "exp" => ZDist::Exponential,
            other => {
                let a = other.strip_prefix("pareto:").ok_or_else(unknown)?;
                ZDist::Pareto { a: a.parse().map_err(|_| unknown())? }
            }
        };
        z.validate()?;
        Ok(z)
    }
}

/// Weight model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    /// `r(x) = 1` with probability `p`, else 0.
    Bernoulli { p: f64 },
    /// `r(x) = lambda * Z_x`.
    Continuum { lambda: f64, z: ZDist },
    /// `r(x) = deg(x)` when `deg(x) >= delta`, else 0.
    Degree { delta: u64 },
}

impl Model {
    pub fn validate(&self) -> Result<(), GenError> {
        match *self {
            Model::Bernoulli { p } => check("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1"),
            Model::Continuum { lambda, z } => {
                check("lambda", lambda, lambda >= 0.0 && lambda.is_finite(), "lambda >= 0")?;
                z.validate()
            }
            Model::Degree { .. } => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Bernoulli { .. } => "bernoulli",
            Model::Continuum { .. } => "continuum",
            Model::Degree { .. } => "degree",
        }
    }

    /// Name and value of the free parameter.
    pub fn parameter(&self) -> (&'static str, f64) {
        match *self {
            Model::Bernoulli { p } => ("p", p),
            Model::Continuum { lambda, .. } => ("lambda", lambda),
            Model::Degree { delta } => ("delta", delta as f64),
        }
    }

    /// Same model with its free parameter replaced.
    pub fn with_parameter(&self, value: f64) -> Model {
        match *self {
            Model::Bernoulli { .. } => Model::Bernoulli { p: value },
            Model::Continuum { z, .. } => Model::Continuum { lambda: value, z },
            Model::Degree { .. } => Model::Degree { delta: value.max(0.0).round() as u64 },
        }
    }
}

/// Underlying graph family; all are finite boxes without wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    /// `{0, ..., side-1}^dim` with nearest-neighbour edges.
    Lattice { dim: usize, side: usize },
    /// Poisson points in `[0, side]^dim`, edges between points closer than `radius`.
    Rgg { dim: usize, side: f64, radius: f64, intensity: f64 },
    /// Delaunay triangulation of Poisson points in `[0, side]^2`.
    Delaunay { side: f64, intensity: f64 },
}

impl GraphKind {
    pub fn name(&self) -> String {
        match self {
            GraphKind::Lattice { dim, .. } => format!("z{dim}"),
            GraphKind::Rgg { dim, .. } => format!("rgg{dim}"),
            GraphKind::Delaunay { .. } => "delaunay".to_string(),
        }
    }

    /// Linear size of the box.
    pub fn size(&self) -> f64 {
        match *self {
            GraphKind::Lattice { side, .. } => side as f64,
            GraphKind::Rgg { side, .. } | GraphKind::Delaunay { side, .. } => side,
        }
    }

    /// Same family with a different linear size.
    pub fn with_size(&self, size: f64) -> GraphKind {
        match *self {
            GraphKind::Lattice { dim, .. } => GraphKind::Lattice { dim, side: size.round().max(1.0) as usize },
            GraphKind::Rgg { dim, radius, intensity, .. } => GraphKind::Rgg { dim, side: size, radius, intensity },
            GraphKind::Delaunay { intensity, .. } => GraphKind::Delaunay { side: size, intensity },
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        match *self {
            GraphKind::Lattice { dim, side } => {
                check("dim", dim as f64, dim >= 1, "dim >= 1")?;
                check("side", side as f64, side >= 1, "side >= 1")
            }
            GraphKind::Rgg { dim, side, radius, intensity } => {
                check("dim", dim as f64, (1..=3).contains(&dim), "1 <= dim <= 3")?;
                check("side", side, side >= 0.0 && side.is_finite(), "side >= 0")?;
                check("radius", radius, radius > 0.0 && radius.is_finite(), "radius > 0")?;
                check("intensity", intensity, intensity > 0.0 && intensity.is_finite(), "intensity > 0")
            }
            GraphKind::Delaunay { side, intensity } => {
                check("side", side, side >= 0.0 && side.is_finite(), "side >= 0")?;
                check("intensity", intensity, intensity > 0.0 && intensity.is_finite(), "intensity > 0")
            }
        }
    }
}

/// Everything needed to build one random instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub graph: GraphKind,
    pub seed: u64,
}

/// Points in `[0, side]^dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub side: f64,
    pub coords: Vec<f64>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// `side^dim` lattice box with nearest-neighbour edges; vertex ids are
/// row-major with the last coordinate varying fastest. Coordinates are kept.
pub fn lattice_box(dim: usize, side: usize) -> Result<Graph, GenError> {
    GraphKind::Lattice { dim, side }.validate()?;
    let total = (side as u128).checked_pow(dim as u32).filter(|&t| t < u32::MAX as u128);
    let n = total.ok_or(GenError::TooLarge((side as u128).saturating_pow(dim as u32)))? as usize;
    let mut edges = Vec::with_capacity(n * dim);
    let mut stride = 1usize;
    for _ in 0..dim {
        for v in 0..n {
            if (v / stride) % side + 1 < side {
                edges.push((v as Vertex, (v + stride) as Vertex));
            }
        }
        stride *= side;
    }
    let mut data = Vec::with_capacity(n * dim);
    for v in 0..n {
        let mut rest = v;
        let mut c = vec![0.0; dim];
        for k in (0..dim).rev() {
            c[k] = (rest % side) as f64;
            rest /= side;
        }
        data.extend(c);
    }
    Ok(Graph::from_edges(n, &edges)?.with_coords(Coords { dim, data })?)
}

/// One uniform in `[0, 1)` per vertex.
pub fn uniforms(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform()).collect()
}

pub fn bernoulli_from(u: &[f64], p: f64) -> Vec<u64> {
    u.iter().map(|&x| u64::from(x < p)).collect()
}

pub fn continuum_from(u: &[f64], lambda: f64, z: ZDist) -> Vec<f64> {
    u.iter().map(|&x| if lambda == 0.0 { 0.0 } else { lambda * z.quantile(x) }).collect()
}

pub fn degrees_from(g: &Graph, delta: u64) -> Vec<u64> {
    (0..g.n() as Vertex)
        .map(|v| {
            let d = g.degree(v) as u64;
            if d >= delta {
                d
            } else {
                0
            }
        })
        .collect()
}

/// Independent Bernoulli(`p`) weights.
pub fn bernoulli_weights(g: impl Into<Arc<Graph>>, p: f64, rng: &mut StreamRng) -> Result<WeightedGraph<u64>, GenError> {
    Model::Bernoulli { p }.validate()?;
    let g = g.into();
    let u = uniforms(g.n(), rng);
    Ok(WeightedGraph::new(g, bernoulli_from(&u, p))?)
}

/// Independent `lambda * Z` weights.
pub fn continuum_weights(
    g: impl Into<Arc<Graph>>,
    lambda: f64,
    z: ZDist,
    rng: &mut StreamRng,
) -> Result<WeightedGraph<f64>, GenError> {
    Model::Continuum { lambda, z }.validate()?;
    let g = g.into();
    let u = uniforms(g.n(), rng);
    Ok(WeightedGraph::new(g, continuum_from(&u, lambda, z))?)
}

/// `r(x) = deg(x) 1{deg(x) >= delta}`.
pub fn degree_weights(g: impl Into<Arc<Graph>>, delta: u64) -> WeightedGraph<u64> {
    let g = g.into();
    let w = degrees_from(&g, delta);
    WeightedGraph::new(g, w).expect("degrees are valid weights")
}

/// Poisson process of the given intensity in `[0, side]^dim`.
pub fn poisson_points(dim: usize, side: f64, intensity: f64, rng: &mut StreamRng) -> Result<PointCloud, GenError> {
    check("dim", dim as f64, (1..=3).contains(&dim), "1 <= dim <= 3")?;
    check("side", side, side >= 0.0 && side.is_finite(), "side >= 0")?;
    check("intensity", intensity, intensity >= 0.0 && intensity.is_finite(), "intensity >= 0")?;
    let mean = intensity * side.powi(dim as i32);
    let count = if mean > 0.0 {
        let d = Poisson::new(mean).map_err(|_| GenError::Range { name: "mean count", value: mean, expect: "finite" })?;
        let c: f64 = d.sample(rng);
        c as usize
    } else {
        0
    };
    let coords: Vec<f64> = (0..count * dim).map(|_| side * rng.uniform()).collect();
    Ok(PointCloud { dim, side, coords })
}

/// Graph with an edge between points at Euclidean distance strictly below `radius`.
pub fn geometric_graph(pc: &PointCloud, radius: f64) -> Result<Graph, GenError> {
    check("radius", radius, radius > 0.0 && radius.is_finite(), "radius > 0")?;
    let n = pc.len();
    let dim = pc.dim;
    let cells_per_axis = ((pc.side / radius).floor() as usize).clamp(1, 1 << 20);
    let cell_of = |p: &[f64]| -> Vec<usize> {
        p.iter().map(|&x| ((x / radius).floor().max(0.0) as usize).min(cells_per_axis - 1)).collect()
    };
    let mut buckets: rustc_hash::FxHashMap<Vec<usize>, Vec<Vertex>> = Default::default();
    for i in 0..n {
        buckets.entry(cell_of(pc.point(i))).or_default().push(i as Vertex);
    }
    let r2 = radius * radius;
    let mut edges = Vec::new();
    let offsets: Vec<Vec<i64>> = (0..3i64.pow(dim as u32))
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let o = k % 3 - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for i in 0..n {
        let p = pc.point(i);
        let c = cell_of(p);
        for off in &offsets {
            let nc: Option<Vec<usize>> = c
                .iter()
                .zip(off)
                .map(|(&x, &o)| {
                    let y = x as i64 + o;
                    (y >= 0 && (y as usize) < cells_per_axis).then_some(y as usize)
                })
                .collect();
            let Some(nc) = nc else { continue };
            if let Some(bucket) = buckets.get(&nc) {
                for &j in bucket {
                    if (j as usize) <= i {
                        continue;
                    }
                    let q = pc.point(j as usize);
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < r2 {
                        edges.push((i as Vertex, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    let g = Graph::from_edges(n, &edges)?;
    Ok(g.with_coords(Coords { dim, data: pc.coords.clone() })?)
}

/// Delaunay graph of a planar point cloud, with its hull vertices.
pub fn delaunay_2d(pc: &PointCloud, seed: u64) -> Result<(Graph, Vec<Vertex>), GenError> {
    check("dim", pc.dim as f64, pc.dim == 2, "dim = 2")?;
    let pts: Vec<[f64; 2]> = (0..pc.len()).map(|i| [pc.coords[2 * i], pc.coords[2 * i + 1]]).collect();
    let tr = triangulate(&pts, seed)?;
    let g = Graph::from_edges(pts.len(), &tr.edges)?.with_coords(Coords { dim: 2, data: pc.coords.clone() })?;
    Ok((g, tr.hull))
}

/// Relative width of the face slabs used by spanning observables.
pub const FACE_FRACTION: f64 = 0.05;

/// A graph in a box with the markers used by finite-size observables.
#[derive(Clone, Debug)]
pub struct BoxGraph {
    pub graph: Arc<Graph>,
    /// Vertex closest to the centre of the box, if any.
    pub centre: Option<Vertex>,
    /// Vertices near the box boundary.
    pub boundary: Vec<bool>,
    /// Vertices in the slabs of relative width [`FACE_FRACTION`] at the faces
    /// `x_0 = 0` and `x_0 = side`.
    pub low_face: Vec<bool>,
    pub high_face: Vec<bool>,
}

/// Builds the graph of `kind` from `rng`.
///
/// Boundary bands: lattice faces; within `radius` of an edge for random
/// geometric graphs; hull vertices and points within one mean spacing of an
/// edge for Delaunay graphs.
pub fn build_box(kind: &GraphKind, rng: &mut StreamRng) -> Result<BoxGraph, GenError> {
    kind.validate()?;
    let (graph, band, hull) = match *kind {
        GraphKind::Lattice { dim, side } => (lattice_box(dim, side)?, 0.5, Vec::new()),
        GraphKind::Rgg { dim, side, radius, intensity } => {
            let pc = poisson_points(dim, side, intensity, rng)?;
            (geometric_graph(&pc, radius)?, radius, Vec::new())
        }
        GraphKind::Delaunay { side, intensity } => {
            let pc = poisson_points(2, side, intensity, rng)?;
            if pc.len() < 3 {
                (Graph::from_edges(pc.len(), &[])?.with_coords(Coords { dim: 2, data: pc.coords.clone() })?, 0.0, Vec::new())
            } else {
                let seed = rng.uniform().to_bits();
                let (g, hull) = delaunay_2d(&pc, seed)?;
                (g, 1.0 / intensity.sqrt(), hull)
            }
        }
    };
    let side_hi = match *kind {
        GraphKind::Lattice { side, .. } => (side - 1) as f64,
        _ => kind.size(),
    };
    let n = graph.n();
    let coords = graph.coords().cloned().unwrap_or(Coords { dim: 1, data: vec![0.0; n] });
    let mid = side_hi / 2.0;
    let face = (FACE_FRACTION * side_hi).max(band);
    let mut centre = None;
    let mut best = f64::INFINITY;
    let mut boundary = vec![false; n];
    let mut low_face = vec![false; n];
    let mut high_face = vec![false; n];
    for v in 0..n {
        let p = coords.point(v as Vertex);
        let d2: f64 = p.iter().map(|&x| (x - mid) * (x - mid)).sum();
        if d2 < best {
            best = d2;
            centre = Some(v as Vertex);
        }
        boundary[v] = p.iter().any(|&x| x < band || x > side_hi - band);
        low_face[v] = p[0] < face;
        high_face[v] = p[0] > side_hi - face;
    }
    for v in hull {
        boundary[v as usize] = true;
    }
    Ok(BoxGraph { graph: Arc::new(graph), centre, boundary, low_face, high_face })
}

/// Weights of either exact or floating type.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Int(Vec<u64>),
    Float(Vec<f64>),
}

/// Weights of `model` on `g` from one uniform per vertex.
pub fn model_weights(g: &Graph, model: &Model, u: &[f64]) -> Weights {
    match *model {
        Model::Bernoulli { p } => Weights::Int(bernoulli_from(u, p)),
        Model::Continuum { lambda, z } => Weights::Float(continuum_from(u, lambda, z)),
        Model::Degree { delta } => Weights::Int(degrees_from(g, delta)),
    }
}

/// Stream for the graph of trial `trial` under `seed`.
pub fn graph_stream(seed: u64, trial: u64) -> StreamRng {
    StreamRng::new(derive(derive(seed, trial), 0))
}

/// Stream for the weights of trial `trial` under `seed`.
pub fn weight_stream(seed: u64, trial: u64) -> StreamRng {
    StreamRng::new(derive(derive(seed, trial), 1))
}

/// Builds the instance of `spec` (trial 0).
pub fn generate(spec: &ModelSpec) -> Result<(BoxGraph, Weights), GenError> {
    spec.model.validate()?;
    let bx = build_box(&spec.graph, &mut graph_stream(spec.seed, 0))?;
    let u = uniforms(bx.graph.n(), &mut weight_stream(spec.seed, 0));
    let w = model_weights(&bx.graph, &spec.model, &u);
    Ok((bx, w))
}

/// Vertices of the largest connected component (smallest id wins ties).
pub fn largest_component(g: &Graph) -> crate::graph::VertexSet {
    let comp = g.components();
    let k = comp.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut size = vec![0usize; k];
    for &c in &comp {
        size[c as usize] += 1;
    }
    let best = (0..k).max_by_key(|&c| (size[c], std::cmp::Reverse(c))).unwrap_or(0) as u32;
    (0..g.n() as Vertex).filter(|&v| comp[v as usize] == best).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_shapes() {
        let g = lattice_box(1, 5).unwrap();
        assert_eq!(g.edge_count(), 4);
        let g = lattice_box(2, 2).unwrap();
        assert_eq!((g.n(), g.edge_count()), (4, 4));
        let g = lattice_box(2, 3).unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.coords().unwrap().point(5), &[1.0, 2.0]);
        assert!(lattice_box(3, 1 << 12).is_err());
    }

    #[test]
    fn bernoulli_extremes_and_mean() {
        let g = Arc::new(lattice_box(1, 100_000).unwrap());
        let mut rng = StreamRng::new(5);
        assert!(bernoulli_weights(g.clone(), 0.0, &mut rng).unwrap().weights().iter().all(|&w| w == 0));
        assert!(bernoulli_weights(g.clone(), 1.0, &mut rng).unwrap().weights().iter().all(|&w| w == 1));
        let w = bernoulli_weights(g, 0.5, &mut rng).unwrap();
        let mean = w.weights().iter().sum::<u64>() as f64 / 1e5;
        assert!((mean - 0.5).abs() < 0.01);
        assert!(Model::Bernoulli { p: 1.5 }.validate().is_err());
    }

    #[test]
    fn continuum_means() {
        let g = Arc::new(lattice_box(1, 100_000).unwrap());
        let mut rng = StreamRng::new(6);
        let w = continuum_weights(g.clone(), 0.0, ZDist::Exponential, &mut rng).unwrap();
        assert!(w.weights().iter().all(|&x| x == 0.0));
        let w = continuum_weights(g.clone(), 0.7, ZDist::Constant, &mut rng).unwrap();
        assert!(w.weights().iter().all(|&x| x == 0.7));
        let w = continuum_weights(g, 2.0, ZDist::Exponential, &mut rng).unwrap();
        let mean = w.weights().iter().sum::<f64>() / 1e5;
        assert!((mean - 2.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn z_parsing() {
        assert_eq!("pareto:1.5".parse::<ZDist>().unwrap(), ZDist::Pareto { a: 1.5 });
        assert!("pareto:-1".parse::<ZDist>().is_err());
        assert!("gamma".parse::<ZDist>().is_err());
        assert_eq!(ZDist::Pareto { a: 2.0 }.quantile(0.75), 2.0);
    }

    #[test]
    fn degree_weight_examples() {
        let g = Graph::path(5);
        assert_eq!(degree_weights(g.clone(), 0).weights(), &[1, 2, 2, 2, 1]);
        assert_eq!(degree_weights(g.clone(), 2).weights(), &[0, 2, 2, 2, 0]);
        assert!(degree_weights(g, 3).weights().iter().all(|&w| w == 0));
    }

    #[test]
    fn geometric_graph_rule_is_strict() {
        let pc = PointCloud { dim: 2, side: 3.0, coords: vec![0.0, 0.0, 0.5, 0.0, 1.0, 0.0] };
        let g = geometric_graph(&pc, 1.0).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 2));
        assert!(!g.has_edge(0, 2));
        let pc = PointCloud { dim: 1, side: 1.0, coords: vec![0.1, 0.2, 0.3, 0.4] };
        assert_eq!(geometric_graph(&pc, 1.0).unwrap().edge_count(), 6);
    }

    #[test]
    fn geometric_graph_matches_brute_force() {
        let mut rng = StreamRng::new(9);
        for dim in 1..=3 {
            let pc = poisson_points(dim, 5.0, 4.0, &mut rng).unwrap();
            let g = geometric_graph(&pc, 0.8).unwrap();
            let mut count = 0;
            for i in 0..pc.len() {
                for j in i + 1..pc.len() {
                    let d2: f64 = pc.point(i).iter().zip(pc.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < 0.64 {
                        count += 1;
                        assert!(g.has_edge(i as u32, j as u32));
                    }
                }
            }
            assert_eq!(count, g.edge_count());
        }
    }

    #[test]
    fn poisson_counts() {
        let mut rng = StreamRng::new(10);
        let trials = 10_000;
        let counts: Vec<f64> = (0..trials).map(|_| poisson_points(2, 10.0, 1.0, &mut rng).unwrap().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        // Standard error of the mean is 0.1; of the variance about 1.4.
        assert!((mean - 100.0).abs() < 0.3, "{mean}");
        assert!((var - 100.0).abs() < 4.5, "{var}");
        assert!(poisson_points(2, 0.0, 1.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ModelSpec {
            model: Model::Degree { delta: 5 },
            graph: GraphKind::Delaunay { side: 10.0, intensity: 2.0 },
            seed: 77,
        };
        let (a, wa) = generate(&spec).unwrap();
        let (b, wb) = generate(&spec).unwrap();
        assert_eq!(*a.graph, *b.graph);
        assert_eq!(wa, wb);
        assert!(a.centre.is_some());
        assert!(a.boundary.iter().any(|&x| x));
    }

    #[test]
    fn delaunay_mean_degree_is_near_six() {
        let mut rng = StreamRng::new(12);
        let pc = poisson_points(2, 40.0, 1.0, &mut rng).unwrap();
        let (g, _) = delaunay_2d(&pc, 1).unwrap();
        let mean = 2.0 * g.edge_count() as f64 / g.n() as f64;
        assert!(mean > 5.7 && mean < 6.0, "{mean}");
    }
}
