//! Finite simple graphs, vertex weights and the graph metric.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Weight;

pub type Vertex = u32;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} out of range (graph has {1} vertices)")]
    InvalidVertex(Vertex, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("empty vertex set")]
    EmptySet,
    #[error("vertex set spans several connected components")]
    SpansComponents,
    #[error("negative or non-finite radius {0}")]
    BadRadius(f64),
    #[error("weight of vertex {0} is negative or not finite")]
    BadWeight(Vertex),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("coordinates must have {expected} entries, got {got}")]
    CoordCount { expected: usize, got: usize },
    #[error("too many vertices ({0})")]
    TooLarge(u128),
    #[error("wgraph line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Point coordinates in `R^dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Coords {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Coords {
    pub fn point(&self, v: Vertex) -> &[f64] {
        let i = v as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Unweighted simple undirected graph in compressed adjacency form.
///
/// Neighbour lists are sorted; vertex ids are `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<u32>,
    targets: Vec<Vertex>,
    coords: Option<Coords>,
}

impl Graph {
    /// Builds a graph from an undirected edge list, rejecting loops and repeats.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        if n > u32::MAX as usize {
            return Err(GraphError::TooLarge(n as u128));
        }
        let mut degree = vec![0u32; n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(GraphError::InvalidVertex(x, n));
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u32);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill: Vec<u32> = offsets[..n].to_vec();
        let mut targets = vec![0; *offsets.last().unwrap() as usize];
        for &(u, v) in edges {
            targets[fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
        }
        for x in 0..n {
            let s = &mut targets[offsets[x] as usize..offsets[x + 1] as usize];
            s.sort_unstable();
            if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = ((x as Vertex).min(w[0]), (x as Vertex).max(w[0]));
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        Ok(Graph {
            offsets,
            targets,
            coords: None,
        })
    }

    /// Same as [`Graph::from_edges`] but silently drops repeated edges.
    pub fn from_edges_dedup(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        let mut es: Vec<(Vertex, Vertex)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        es.sort_unstable();
        es.dedup();
        Graph::from_edges(n, &es)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n as Vertex).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("path graph is simple")
    }

    pub fn with_coords(mut self, coords: Coords) -> Result<Self, GraphError> {
        if coords.data.len() != coords.dim * self.n() {
            return Err(GraphError::CoordCount {
                expected: coords.dim * self.n(),
                got: coords.data.len(),
            });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.targets[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n() as Vertex).flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn coords(&self) -> Option<&Coords> {
        self.coords.as_ref()
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<(), GraphError> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex(v, self.n()))
        }
    }

    /// Connected-component label of every vertex, labels in order of first vertex.
    pub fn components(&self) -> Vec<u32> {
        let n = self.n();
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        let mut queue = Vec::new();
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            queue.clear();
            queue.push(s as Vertex);
            while let Some(u) = queue.pop() {
                for &w in self.neighbors(u) {
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        queue.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Induced subgraph on `keep` (sorted), with vertices renumbered in order.
    pub fn induced(&self, keep: &VertexSet) -> Graph {
        let mut index = vec![u32::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            index[v as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for &u in keep.iter() {
            for &w in self.neighbors(u) {
                if u < w && index[w as usize] != u32::MAX {
                    edges.push((index[u as usize], index[w as usize]));
                }
            }
        }
        let mut g = Graph::from_edges(keep.len(), &edges).expect("induced subgraph of a simple graph is simple");
        if let Some(c) = &self.coords {
            let mut data = Vec::with_capacity(keep.len() * c.dim);
            for &v in keep.iter() {
                data.extend_from_slice(c.point(v));
            }
            g.coords = Some(Coords { dim: c.dim, data });
        }
        g
    }
}

/// A graph together with non-negative vertex weights `r(x)`.
#[derive(Clone, Debug)]
pub struct WeightedGraph<W> {
    graph: Arc<Graph>,
    weights: Vec<W>,
}

impl<W: Weight> WeightedGraph<W> {
    pub fn new(graph: impl Into<Arc<Graph>>, weights: Vec<W>) -> Result<Self, GraphError> {
        let graph = graph.into();
        if weights.len() != graph.n() {
            return Err(GraphError::WeightCount {
                expected: graph.n(),
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_valid()) {
            return Err(GraphError::BadWeight(i as Vertex));
        }
        Ok(WeightedGraph { graph, weights })
    }

    /// All weights zero.
    pub fn unweighted(graph: impl Into<Arc<Graph>>) -> Self {
        let graph = graph.into();
        let weights = vec![W::zero(); graph.n()];
        WeightedGraph { graph, weights }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, v: Vertex) -> &W {
        &self.weights[v as usize]
    }

    /// Same topology, new weights.
    pub fn reweighted<V: Weight>(&self, weights: Vec<V>) -> Result<WeightedGraph<V>, GraphError> {
        WeightedGraph::new(Arc::clone(&self.graph), weights)
    }

    pub fn set_weight(&mut self, v: Vertex, w: W) -> Result<(), GraphError> {
        self.graph.check_vertex(v)?;
        if !w.is_valid() {
            return Err(GraphError::BadWeight(v));
        }
        self.weights[v as usize] = w;
        Ok(())
    }

    /// Induced weighted subgraph; vertex `i` of the result is `keep[i]`.
    pub fn induced(&self, keep: &VertexSet) -> WeightedGraph<W> {
        let g = self.graph.induced(keep);
        let weights = keep.iter().map(|&v| self.weights[v as usize].clone()).collect();
        WeightedGraph {
            graph: Arc::new(g),
            weights,
        }
    }
}

/// Sorted, duplicate-free set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct VertexSet(Vec<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(Vec::new())
    }

    pub fn singleton(v: Vertex) -> Self {
        VertexSet(vec![v])
    }

    pub fn range(lo: Vertex, hi: Vertex) -> Self {
        VertexSet((lo..hi).collect())
    }

    /// Wraps an already sorted, deduplicated vector.
    pub fn from_sorted(v: Vec<Vertex>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        VertexSet(v)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSet(mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as Vertex).collect())
    }

    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            m[v as usize] = true;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vertex> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Vertex> {
        self.0
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        let mut j = 0;
        for &v in &self.0 {
            while j < other.0.len() && other.0[j] < v {
                j += 1;
            }
            if j == other.0.len() || other.0[j] != v {
                return false;
            }
        }
        true
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take_left = j == other.0.len() || (i < self.0.len() && self.0[i] <= other.0[j]);
            let v = if take_left { self.0[i] } else { other.0[j] };
            if take_left {
                i += 1;
                if j < other.0.len() && other.0[j] == v {
                    j += 1;
                }
            } else {
                j += 1;
            }
            out.push(v);
        }
        VertexSet(out)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| other.contains(v)).collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| !other.contains(v)).collect())
    }

    pub fn check(&self, n: usize) -> Result<(), GraphError> {
        match self.0.last() {
            Some(&v) if v as usize >= n => Err(GraphError::InvalidVertex(v, n)),
            _ => Ok(()),
        }
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        let mut v: Vec<Vertex> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Vertex;
    type IntoIter = std::slice::Iter<'a, Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Reusable breadth-first search state.
///
/// Visited marks are epoch stamps, so a search costs time proportional to
/// what it touches rather than to `n`.
#[derive(Clone, Debug)]
pub struct Bfs {
    stamp: Vec<u32>,
    dist: Vec<u32>,
    epoch: u32,
    order: Vec<Vertex>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Bfs {
            stamp: vec![0; n],
            dist: vec![0; n],
            epoch: 0,
            order: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.order.clear();
    }

    /// Multi-source search to depth `radius`, only entering vertices accepted
    /// by `allow` (sources are always entered). Returns visited vertices in
    /// non-decreasing distance order.
    pub fn run_filtered<F: Fn(Vertex) -> bool>(
        &mut self,
        g: &Graph,
        sources: impl IntoIterator<Item = Vertex>,
        radius: u64,
        allow: F,
    ) -> &[Vertex] {
        self.next_epoch();
        for s in sources {
            if self.stamp[s as usize] != self.epoch {
                self.stamp[s as usize] = self.epoch;
                self.dist[s as usize] = 0;
                self.order.push(s);
            }
        }
        let mut head = 0;
        while head < self.order.len() {
            let u = self.order[head];
            head += 1;
            let du = self.dist[u as usize];
            if du as u64 >= radius {
                continue;
            }
            for &w in g.neighbors(u) {
                if self.stamp[w as usize] != self.epoch && allow(w) {
                    self.stamp[w as usize] = self.epoch;
                    self.dist[w as usize] = du + 1;
                    self.order.push(w);
                }
            }
        }
        &self.order
    }

    pub fn run(&mut self, g: &Graph, sources: impl IntoIterator<Item = Vertex>, radius: u64) -> &[Vertex] {
        self.run_filtered(g, sources, radius, |_| true)
    }

    /// Vertices visited by the last search, in non-decreasing distance order.
    pub fn visited(&self) -> &[Vertex] {
        &self.order
    }

    /// Distance found by the last search, if `v` was reached.
    #[inline]
    pub fn dist(&self, v: Vertex) -> Option<u32> {
        (self.stamp[v as usize] == self.epoch).then(|| self.dist[v as usize])
    }

    #[inline]
    pub fn reached(&self, v: Vertex) -> bool {
        self.stamp[v as usize] == self.epoch
    }
}

/// Graph distance between `u` and `v`; `None` if they are disconnected.
pub fn distance(g: &Graph, u: Vertex, v: Vertex) -> Result<Option<u32>, GraphError> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    if u == v {
        return Ok(Some(0));
    }
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = VecDeque::from([u]);
    dist[u as usize] = 0;
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if dist[y as usize] == u32::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                if y == v {
                    return Ok(Some(dist[y as usize]));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(None)
}

/// `d(A, B) = min d(a, b)` by multi-source search from the smaller set.
pub fn set_distance(g: &Graph, a: &VertexSet, b: &VertexSet) -> Result<Option<u32>, GraphError> {
    if a.is_empty() || b.is_empty() {
        return Err(GraphError::EmptySet);
    }
    a.check(g.n())?;
    b.check(g.n())?;
    let (src, dst) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let target = dst.to_mask(g.n());
    let mut bfs = Bfs::new(g.n());
    let order = bfs.run(g, src.iter().copied(), u64::MAX).to_vec();
    Ok(order.into_iter().find(|&v| target[v as usize]).and_then(|v| bfs.dist(v)))
}

/// `B(A, l) = { z : d(z, A) <= l }`; distances are integers, so the threshold is `floor(l)`.
pub fn ball(g: &Graph, a: &VertexSet, l: f64) -> Result<VertexSet, GraphError> {
    if l.is_nan() || l < 0.0 {
        return Err(GraphError::BadRadius(l));
    }
    if a.is_empty() {
        return Err(GraphError::EmptySet);
    }
    a.check(g.n())?;
    let radius = if l.is_infinite() { u64::MAX } else { l.floor() as u64 };
    Ok(ball_int(g, a.iter().copied(), radius))
}

/// Ball with an integer radius, no validation.
pub fn ball_int(g: &Graph, sources: impl IntoIterator<Item = Vertex>, radius: u64) -> VertexSet {
    let mut bfs = Bfs::new(g.n());
    bfs.run(g, sources, radius).iter().copied().collect()
}

/// `diam(A) = max d(x, y)` over pairs in `A`, measured in `g`.
pub fn diam_set(g: &Graph, a: &VertexSet) -> Result<u32, GraphError> {
    if a.is_empty() {
        return Err(GraphError::EmptySet);
    }
    a.check(g.n())?;
    let mut bfs = Bfs::new(g.n());
    let mut best = 0;
    for &x in a {
        bfs.run(g, [x], u64::MAX);
        for &y in a {
            match bfs.dist(y) {
                Some(d) => best = best.max(d),
                None => return Err(GraphError::SpansComponents),
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::path(n)
    }

    #[test]
    fn path_distances() {
        let g = path(3);
        assert_eq!(distance(&g, 0, 2).unwrap(), Some(2));
        assert_eq!(distance(&g, 1, 1).unwrap(), Some(0));
        let two = Graph::from_edges(2, &[]).unwrap();
        assert_eq!(distance(&two, 0, 1).unwrap(), None);
        assert_eq!(distance(&g, 0, 9), Err(GraphError::InvalidVertex(9, 3)));
    }

    #[test]
    fn set_distance_examples() {
        let g = path(5);
        let a: VertexSet = [0, 1].into_iter().collect();
        let b: VertexSet = [3, 4].into_iter().collect();
        assert_eq!(set_distance(&g, &a, &b).unwrap(), Some(2));
        let c: VertexSet = [1, 2].into_iter().collect();
        assert_eq!(set_distance(&g, &a, &c).unwrap(), Some(0));
        assert_eq!(
            set_distance(&g, &VertexSet::singleton(0), &VertexSet::singleton(4)).unwrap(),
            distance(&g, 0, 4).unwrap()
        );
        assert_eq!(set_distance(&g, &VertexSet::new(), &a), Err(GraphError::EmptySet));
    }

    #[test]
    fn ball_examples() {
        let g = path(10);
        let a: VertexSet = [4, 5].into_iter().collect();
        assert_eq!(ball(&g, &a, 0.7).unwrap(), a);
        assert_eq!(ball(&g, &a, 2.0).unwrap(), VertexSet::range(2, 8));
        assert_eq!(ball(&g, &a, 2.9).unwrap(), VertexSet::range(2, 8));
        assert_eq!(ball(&g, &a, 100.0).unwrap(), VertexSet::range(0, 10));
        assert!(ball(&g, &a, -1.0).is_err());
        assert!(ball(&g, &VertexSet::new(), 1.0).is_err());
    }

    #[test]
    fn diam_examples() {
        let g = path(5);
        assert_eq!(diam_set(&g, &VertexSet::singleton(3)).unwrap(), 0);
        let a: VertexSet = [0, 1, 3, 4].into_iter().collect();
        assert_eq!(diam_set(&g, &a).unwrap(), 4);
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(diam_set(&k4, &VertexSet::range(0, 3)).unwrap(), 1);
        let split = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(
            diam_set(&split, &[0, 2].into_iter().collect()),
            Err(GraphError::SpansComponents)
        );
    }

    #[test]
    fn rejects_loops_and_duplicates() {
        assert_eq!(Graph::from_edges(3, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(
            Graph::from_edges(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
    }

    #[test]
    fn set_operations() {
        let a: VertexSet = [1, 3, 5].into_iter().collect();
        let b: VertexSet = [2, 3, 7].into_iter().collect();
        assert_eq!(a.union(&b).as_slice(), &[1, 2, 3, 5, 7]);
        assert_eq!(a.intersection(&b).as_slice(), &[3]);
        assert_eq!(a.difference(&b).as_slice(), &[1, 5]);
        assert!(VertexSet::singleton(3).is_subset(&a));
        assert!(!b.is_subset(&a));
    }

    #[test]
    fn induced_renumbers() {
        let g = path(5);
        let h = g.induced(&[1, 2, 4].into_iter().collect());
        assert_eq!(h.n(), 3);
        assert_eq!(h.edge_count(), 1);
        assert!(h.has_edge(0, 1));
    }
}
