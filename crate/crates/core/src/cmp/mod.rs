//! Cumulative merging partitions.
//!
//! A partition of the vertices is admissible when any two distinct clusters
//! satisfy `d(C, C') > min(r(C), r(C'))^alpha`, where `r(C)` is the total
//! weight of `C`. The cumulative merging partition is the finest admissible
//! one; it is obtained by merging pairs with `d <= min(r, r')^alpha` in any
//! order until nothing changes.

pub mod engine;
pub mod eta;
pub mod stable;

use serde_json::{json, Value};

use crate::graph::{Bfs, Graph, GraphError, Vertex, VertexSet, WeightedGraph};
use crate::rng::StreamRng;
use crate::scalar::{total, Exponent, Weight};

pub use engine::Metric;
use engine::Merger;

pub use eta::{check_chain_costs, check_eta_distance_bounds, eta_stabiliser, gamma, ChainMode, ChainReport, EtaConfig};
pub use stable::{
    descendant_closure, explore_stabiliser, explore_stabiliser_of_set, ExploreOutcome, is_stable, is_stable_with, stabiliser_iterative, Exploration, StableConfig,
};

/// Parameters shared by every partition computation.
#[derive(Clone, Debug, PartialEq)]
pub struct CmpConfig {
    pub alpha: Exponent,
}

impl CmpConfig {
    pub fn new(alpha: Exponent) -> Self {
        CmpConfig { alpha }
    }
}

/// Disjoint-set partition with per-root weight and member list.
#[derive(Clone, Debug)]
pub struct Partition<W> {
    parent: Vec<Vertex>,
    weight: Vec<W>,
    members: Vec<Vec<Vertex>>,
}

impl<W: Weight> Partition<W> {
    /// All singletons.
    pub fn finest(weights: &[W]) -> Self {
        Partition {
            parent: (0..weights.len() as Vertex).collect(),
            weight: weights.to_vec(),
            members: (0..weights.len() as Vertex).map(|v| vec![v]).collect(),
        }
    }

    /// Partition given by a label per vertex; equal labels share a cluster.
    pub fn from_labels(weights: &[W], labels: &[u32]) -> Self {
        assert_eq!(weights.len(), labels.len());
        let mut p = Self::finest(weights);
        let mut first: rustc_hash::FxHashMap<u32, Vertex> = Default::default();
        for (v, &l) in labels.iter().enumerate() {
            match first.get(&l) {
                Some(&u) => {
                    p.union(u, v as Vertex);
                }
                None => {
                    first.insert(l, v as Vertex);
                }
            }
        }
        p
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn find(&self, mut v: Vertex) -> Vertex {
        while self.parent[v as usize] != v {
            v = self.parent[v as usize];
        }
        v
    }

    /// Unions the clusters of `a` and `b`; returns `false` if already joined.
    pub fn union(&mut self, a: Vertex, b: Vertex) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.members[ra as usize].len() >= self.members[rb as usize].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        let moved = std::mem::take(&mut self.members[small as usize]);
        self.members[big as usize].extend(moved);
        let w = std::mem::replace(&mut self.weight[small as usize], W::zero());
        self.weight[big as usize] += &w;
        true
    }

    pub fn cluster_weight(&self, v: Vertex) -> &W {
        &self.weight[self.find(v) as usize]
    }

    pub fn cluster_size(&self, v: Vertex) -> usize {
        self.members[self.find(v) as usize].len()
    }

    /// Clusters as sorted member lists, ordered by minimum member.
    pub fn clusters(&self) -> Vec<Vec<Vertex>> {
        let mut out: Vec<Vec<Vertex>> = (0..self.n())
            .filter(|&v| self.parent[v] == v as Vertex)
            .map(|v| {
                let mut m = self.members[v].clone();
                m.sort_unstable();
                m
            })
            .collect();
        out.sort_unstable_by_key(|m| m[0]);
        out
    }

    /// Minimum member of each vertex's cluster.
    pub fn labels(&self) -> Vec<Vertex> {
        let mut out = vec![0; self.n()];
        for c in self.clusters() {
            for &v in &c {
                out[v as usize] = c[0];
            }
        }
        out
    }
}

/// One merge operation: joins the clusters of `x` and `y` when
/// `d(x, y) <= min(r(C_x), r(C_y))^alpha`. Returns whether a merge happened.
pub fn merge_step<W: Weight>(
    g: &Graph,
    p: &mut Partition<W>,
    x: Vertex,
    y: Vertex,
    cfg: &CmpConfig,
) -> Result<bool, GraphError> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if p.find(x) == p.find(y) {
        return Ok(false);
    }
    let (wx, wy) = (p.cluster_weight(x), p.cluster_weight(y));
    let reach = wx.reach(&cfg.alpha).min(wy.reach(&cfg.alpha));
    if reach == 0 {
        return Ok(false);
    }
    match crate::graph::distance(g, x, y)? {
        Some(d) if d as u64 <= reach => Ok(p.union(x, y)),
        _ => Ok(false),
    }
}

/// A cluster of a computed partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster<W> {
    /// Sorted members; `members[0]` is the canonical root.
    pub members: Vec<Vertex>,
    pub weight: W,
    /// `floor(weight^alpha)`, capped.
    pub reach: u64,
}

impl<W> Cluster<W> {
    pub fn root(&self) -> Vertex {
        self.members[0]
    }
}

/// A partition of a vertex domain together with its oriented cluster graph.
#[derive(Clone, Debug)]
pub struct CmpResult<W> {
    pub alpha: Exponent,
    /// Clusters ordered by canonical root.
    pub clusters: Vec<Cluster<W>>,
    /// Cluster index of each vertex; `u32::MAX` outside the domain.
    pub cluster_of: Vec<u32>,
    /// Pairs `(i, j)` of cluster indices with `C_i -> C_j`, sorted.
    pub edges: Vec<(u32, u32)>,
}

impl<W: Weight> CmpResult<W> {
    fn from_labels(weights: &[W], alpha: &Exponent, labels: &[Vertex]) -> Self {
        let n = labels.len();
        let mut index = vec![u32::MAX; n];
        let mut clusters: Vec<Cluster<W>> = Vec::new();
        let mut cluster_of = vec![u32::MAX; n];
        for v in 0..n {
            let l = labels[v];
            if l == u32::MAX {
                continue;
            }
            if index[l as usize] == u32::MAX {
                index[l as usize] = clusters.len() as u32;
                clusters.push(Cluster { members: Vec::new(), weight: W::zero(), reach: 0 });
            }
            let i = index[l as usize];
            cluster_of[v] = i;
            let c = &mut clusters[i as usize];
            c.members.push(v as Vertex);
            c.weight += &weights[v];
        }
        for c in clusters.iter_mut() {
            c.reach = c.weight.reach(alpha);
        }
        CmpResult { alpha: alpha.clone(), clusters, cluster_of, edges: Vec::new() }
    }

    pub fn cluster(&self, v: Vertex) -> &Cluster<W> {
        &self.clusters[self.cluster_of[v as usize] as usize]
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        let i = self.cluster_of[v as usize];
        (i != u32::MAX).then_some(i as usize)
    }

    /// Canonical root of each vertex's cluster; `u32::MAX` outside the domain.
    pub fn labels(&self) -> Vec<Vertex> {
        self.cluster_of
            .iter()
            .map(|&i| if i == u32::MAX { u32::MAX } else { self.clusters[i as usize].root() })
            .collect()
    }

    pub fn partition(&self, weights: &[W]) -> Partition<W> {
        let labels: Vec<u32> =
            self.labels().iter().enumerate().map(|(v, &l)| if l == u32::MAX { v as u32 } else { l }).collect();
        Partition::from_labels(weights, &labels)
    }

    /// Out-neighbours of cluster `i` in the oriented cluster graph.
    pub fn successors(&self, i: usize) -> &[(u32, u32)] {
        let lo = self.edges.partition_point(|&(a, _)| (a as usize) < i);
        let hi = self.edges.partition_point(|&(a, _)| (a as usize) <= i);
        &self.edges[lo..hi]
    }

    pub fn to_json(&self) -> Value {
        let clusters: Vec<Value> = self
            .clusters
            .iter()
            .map(|c| {
                json!({
                    "root": c.root(),
                    "members": c.members,
                    "weight": c.weight.to_json(),
                    "size": c.members.len(),
                    "reach": c.reach,
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|&(a, b)| json!([self.clusters[a as usize].root(), self.clusters[b as usize].root()]))
            .collect();
        json!({
            "alpha": self.alpha.to_string(),
            "cluster_count": self.clusters.len(),
            "clusters": clusters,
            "oriented_edges": edges,
        })
    }
}

/// The cumulative merging partition, without the oriented cluster graph.
pub fn compute_partition<W: Weight>(g: &WeightedGraph<W>, cfg: &CmpConfig) -> CmpResult<W> {
    let mut m = Merger::full(g.graph(), g.weights(), cfg.alpha.clone());
    m.run();
    CmpResult::from_labels(g.weights(), &cfg.alpha, &m.labels())
}

/// The cumulative merging partition and its oriented cluster graph.
pub fn compute_cmp<W: Weight>(g: &WeightedGraph<W>, cfg: &CmpConfig) -> CmpResult<W> {
    let mut res = compute_partition(g, cfg);
    res.edges = oriented_edges(g.graph(), &res);
    res
}

/// Same partition as [`compute_partition`], processing clusters in an order drawn from `rng`.
pub fn compute_partition_shuffled<W: Weight>(g: &WeightedGraph<W>, cfg: &CmpConfig, rng: StreamRng) -> CmpResult<W> {
    let mut m = Merger::full(g.graph(), g.weights(), cfg.alpha.clone()).shuffled(rng);
    m.run();
    CmpResult::from_labels(g.weights(), &cfg.alpha, &m.labels())
}

/// Cumulative merging partition of the subgraph on `set`.
///
/// With [`Metric::Induced`] this is the partition of the induced subgraph;
/// with [`Metric::Ambient`] distances are measured in the whole graph.
pub fn compute_on<W: Weight>(g: &WeightedGraph<W>, set: &VertexSet, metric: Metric, cfg: &CmpConfig) -> CmpResult<W> {
    let mask = set.to_mask(g.n());
    let mut m = Merger::restricted(g.graph(), g.weights(), cfg.alpha.clone(), &mask, metric);
    m.run();
    CmpResult::from_labels(g.weights(), &cfg.alpha, &m.labels())
}

/// Checks `d(C, C') > min(r(C), r(C'))^alpha` for every pair of distinct clusters.
///
/// `labels` gives a cluster label per vertex. Each cluster is searched to its
/// own reach; a pair within range of the smaller reach is found from that side.
pub fn is_admissible<W: Weight>(g: &WeightedGraph<W>, labels: &[u32], cfg: &CmpConfig) -> bool {
    let n = g.n();
    assert_eq!(labels.len(), n);
    let mut groups: rustc_hash::FxHashMap<u32, Vec<Vertex>> = Default::default();
    for (v, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(v as Vertex);
    }
    let reach: rustc_hash::FxHashMap<u32, u64> = groups
        .iter()
        .map(|(&l, m)| (l, total(m.iter().map(|&v| g.weight(v))).reach(&cfg.alpha)))
        .collect();
    let mut bfs = Bfs::new(n);
    for (&l, members) in &groups {
        let r = reach[&l];
        if r == 0 {
            continue;
        }
        bfs.run(g.graph(), members.iter().copied(), r.min(n as u64));
        for &v in bfs.visited() {
            let lv = labels[v as usize];
            if lv != l && bfs.dist(v).unwrap() as u64 <= reach[&lv].min(r) {
                return false;
            }
        }
    }
    true
}

/// Upper bound on the diameter of a cluster of weight `r`.
///
/// `max(r log2 r / 2, 0)` when `alpha = 1`, otherwise `r^alpha / (2^alpha - 2)`.
pub fn diameter_bound_f(r: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        if r <= 0.0 {
            0.0
        } else {
            (r * r.log2() / 2.0).max(0.0)
        }
    } else {
        r.max(0.0).powf(alpha) / (2f64.powf(alpha) - 2.0)
    }
}

/// All pairs `C -> C'` with `d(C, C') <= r(C)^alpha`, as sorted index pairs.
pub fn oriented_edges<W: Weight>(g: &Graph, res: &CmpResult<W>) -> Vec<(u32, u32)> {
    let n = g.n();
    let mut bfs = Bfs::new(n);
    let mut out = Vec::new();
    let mut seen = vec![u32::MAX; res.clusters.len()];
    for (i, c) in res.clusters.iter().enumerate() {
        if c.reach == 0 {
            continue;
        }
        let mut targets = Vec::new();
        for &v in bfs.run(g, c.members.iter().copied(), c.reach.min(n as u64)) {
            let j = res.cluster_of[v as usize];
            if j != u32::MAX && j as usize != i && seen[j as usize] != i as u32 {
                seen[j as usize] = i as u32;
                targets.push(j);
            }
        }
        targets.sort_unstable();
        out.extend(targets.into_iter().map(|j| (i as u32, j)));
    }
    out
}
