//! Stable sets, stabilisers and the local exploration of a stabiliser.
//!
//! `H` is stable when every cluster `C` of the partition of `H` satisfies
//! `B(C, r(C)^alpha) ⊂ H`. The stabiliser of `W` is the smallest stable set
//! containing `W`.

use crate::cmp::engine::{Merger, Metric};
use crate::cmp::{CmpConfig, CmpResult};
use crate::graph::{Bfs, Vertex, VertexSet, WeightedGraph};
use crate::scalar::Weight;

/// Options for [`is_stable_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StableConfig {
    /// Metric used to merge clusters inside `H`. Influence balls are always
    /// taken in the whole graph, since a ball measured inside `H` is trivially
    /// contained in `H`.
    pub partition_metric: Metric,
}

impl Default for StableConfig {
    fn default() -> Self {
        StableConfig { partition_metric: Metric::Induced }
    }
}

/// Stability of `H`: clusters of the induced subgraph on `H`, balls in `g`.
///
/// Measuring merge distances in `g` instead gives the same verdict.
pub fn is_stable<W: Weight>(g: &WeightedGraph<W>, h: &VertexSet, cfg: &CmpConfig) -> bool {
    is_stable_with(g, h, cfg, &StableConfig::default())
}

pub fn is_stable_with<W: Weight>(g: &WeightedGraph<W>, h: &VertexSet, cfg: &CmpConfig, opts: &StableConfig) -> bool {
    if h.is_empty() {
        return true;
    }
    let n = g.n();
    let mask = h.to_mask(n);
    let mut m = Merger::restricted(g.graph(), g.weights(), cfg.alpha.clone(), &mask, opts.partition_metric);
    m.run();
    let mut bfs = Bfs::new(n);
    for root in m.roots() {
        let reach = m.reach(root);
        if reach == 0 {
            continue;
        }
        let members = m.members(root).to_vec();
        let radius = reach.min(n as u64);
        if bfs.run(g.graph(), members, radius).iter().any(|&v| !mask[v as usize]) {
            return false;
        }
    }
    true
}

/// Stabiliser of `w` by the iteration `S <- ∪_{x∈S} B(x, r(C_x)^alpha)`,
/// where `C_x` is the cluster of `x` in the global partition `res`.
pub fn stabiliser_iterative<W: Weight>(g: &WeightedGraph<W>, res: &CmpResult<W>, w: &VertexSet) -> VertexSet {
    let n = g.n();
    let mut inside = w.to_mask(n);
    let mut frontier: Vec<Vertex> = w.iter().copied().collect();
    let mut bfs = Bfs::new(n);
    while !frontier.is_empty() {
        frontier.sort_unstable_by_key(|&v| res.cluster_of[v as usize]);
        let mut next = Vec::new();
        for group in frontier.chunk_by(|a, b| res.cluster_of[*a as usize] == res.cluster_of[*b as usize]) {
            let reach = res.cluster(group[0]).reach.min(n as u64);
            if reach == 0 {
                continue;
            }
            for &v in bfs.run(g.graph(), group.iter().copied(), reach) {
                if !inside[v as usize] {
                    inside[v as usize] = true;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    VertexSet::from_mask(&inside)
}

/// Cluster `i` together with every cluster reachable from it by oriented edges.
///
/// `res` must carry its oriented edges.
pub fn descendant_closure<W: Weight>(res: &CmpResult<W>, i: usize) -> VertexSet {
    let mut seen = vec![false; res.clusters.len()];
    let mut stack = vec![i];
    seen[i] = true;
    let mut out = Vec::new();
    while let Some(c) = stack.pop() {
        out.extend_from_slice(&res.clusters[c].members);
        for &(_, j) in res.successors(c) {
            if !seen[j as usize] {
                seen[j as usize] = true;
                stack.push(j as usize);
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExploreOutcome {
    /// The explored set stopped growing; it is the stabiliser.
    Stable,
    /// The explored set grew past the budget.
    BudgetExceeded,
    /// The explored set reached a vertex of the stop set.
    Stopped,
}

/// Result of [`explore_stabiliser`].
#[derive(Clone, Debug)]
pub struct Exploration<W> {
    pub outcome: ExploreOutcome,
    /// Final explored set; the stabiliser when `outcome` is `Stable`.
    pub stabiliser: VertexSet,
    /// Partition of the explored set.
    pub local: CmpResult<W>,
    /// Vertices whose weight was read.
    pub touched: VertexSet,
    pub rounds: usize,
}

impl<W> Exploration<W> {
    pub fn is_stable(&self) -> bool {
        self.outcome == ExploreOutcome::Stable
    }
}

/// Grows `H^0 = {x0}` by `H^{k+1} = ∪_{C ∈ C(H^k)} B(C, r(C)^alpha)` until it
/// stops changing, reads only weights of vertices it adds to `H`.
///
/// Stops early when `|H|` exceeds `budget` or, if `stop` is given, when `H`
/// meets a vertex marked in `stop`.
pub fn explore_stabiliser<W: Weight>(
    g: &WeightedGraph<W>,
    x0: Vertex,
    cfg: &CmpConfig,
    budget: usize,
    stop: Option<&[bool]>,
) -> Exploration<W> {
    explore_stabiliser_of_set(g, &[x0], cfg, budget, stop)
}

/// [`explore_stabiliser`] started from `H^0 = sources`; the result is the
/// smallest stable set containing all of `sources`.
pub fn explore_stabiliser_of_set<W: Weight>(
    g: &WeightedGraph<W>,
    sources: &[Vertex],
    cfg: &CmpConfig,
    budget: usize,
    stop: Option<&[bool]>,
) -> Exploration<W> {
    let mut m = Merger::empty(g.graph(), g.weights(), cfg.alpha.clone(), Metric::Ambient);
    m.track_dirty(true);
    for &x in sources {
        m.add_vertex(x);
    }
    let mut outcome = if stop.is_some_and(|s| sources.iter().any(|&x| s[x as usize])) {
        Some(ExploreOutcome::Stopped)
    } else {
        None
    };
    if outcome.is_none() && m.domain_size() > budget {
        outcome = Some(ExploreOutcome::BudgetExceeded);
    }
    let mut rounds = 0;
    while outcome.is_none() {
        m.run();
        let mut new = Vec::new();
        for c in m.drain_dirty() {
            if m.reach(c) == 0 {
                continue;
            }
            let ball = if m.has_current_field(c) { m.take_fresh(c) } else { m.ball_of(c) };
            new.extend(ball.into_iter().filter(|&v| !m.in_domain(v)));
        }
        if new.is_empty() {
            outcome = Some(ExploreOutcome::Stable);
            break;
        }
        rounds += 1;
        for v in new {
            if m.add_vertex(v) && stop.is_some_and(|s| s[v as usize]) {
                outcome = Some(ExploreOutcome::Stopped);
            }
        }
        if outcome.is_none() && m.domain_size() > budget {
            outcome = Some(ExploreOutcome::BudgetExceeded);
        }
    }
    if outcome == Some(ExploreOutcome::Stopped) || outcome == Some(ExploreOutcome::BudgetExceeded) {
        m.run();
    }
    let labels = m.labels();
    let stabiliser: VertexSet = (0..g.n() as Vertex).filter(|&v| m.in_domain(v)).collect();
    let local = CmpResult::from_labels(g.weights(), &cfg.alpha, &labels);
    Exploration { outcome: outcome.unwrap(), touched: stabiliser.clone(), stabiliser, local, rounds }
}
