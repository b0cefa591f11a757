//! Eta-stabilisers and the distance and chain-cost bounds they satisfy.
//!
//! `C ->eta C'` when `C != C'` and `d(C, C') <= eta * r(C)^alpha`. The
//! eta-stabiliser of `C` is `C` with all its descendants for this relation.
//! In the graph `G^eta`, `x -> y` when `y` lies on the outer boundary of the
//! eta-stabiliser of `x`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::cmp::CmpResult;
use crate::graph::{Bfs, Graph, Vertex, VertexSet, WeightedGraph};
use crate::rng::StreamRng;
use crate::scalar::{Rational, Weight};

/// Relative slack for floating-point bound comparisons.
const REL_TOL: f64 = 1e-9;
/// Chains are enumerated one by one up to this count.
const EXHAUSTIVE_LIMIT: usize = 1000;
/// Above this region size the weak check runs from sampled start vertices.
const MIN_COST_ALL_SOURCES: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum EtaError {
    #[error("eta must lie in (0, 1], got {0}")]
    EtaRange(f64),
    #[error("the distance bound needs alpha > 1")]
    AlphaOne,
    #[error("beta = {beta} outside [1, {max}]")]
    BetaRange { beta: f64, max: f64 },
    #[error("cluster index {0} out of range")]
    BadCluster(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaConfig {
    pub eta: Rational,
    /// Offset in `r~(C) = r(C) + offset`.
    pub r_tilde_offset: f64,
}

impl EtaConfig {
    pub fn new(eta: Rational) -> Result<Self, EtaError> {
        let v = eta.value();
        if !(v > 0.0 && v <= 1.0) {
            return Err(EtaError::EtaRange(v));
        }
        Ok(EtaConfig { eta, r_tilde_offset: 2.0 })
    }
}

/// `1/(2^alpha - 2) + eta/(1 - eta) * (1 + 1/(2^alpha - 2))`.
pub fn gamma(alpha: f64, eta: f64) -> f64 {
    let k = 1.0 / (2f64.powf(alpha) - 2.0);
    k + eta / (1.0 - eta) * (1.0 + k)
}

/// Eta-successor lists of every cluster, and cached stabilisers.
pub struct EtaIndex<'a, W> {
    g: &'a Graph,
    res: &'a CmpResult<W>,
    succ: Vec<Vec<u32>>,
    cache: FxHashMap<u32, (VertexSet, Vec<Vertex>)>,
}

impl<'a, W: Weight> EtaIndex<'a, W> {
    pub fn new(g: &'a Graph, res: &'a CmpResult<W>, cfg: &EtaConfig) -> Self {
        let n = g.n();
        let mut bfs = Bfs::new(n);
        let mut succ = vec![Vec::new(); res.clusters.len()];
        for (i, c) in res.clusters.iter().enumerate() {
            let reach = c.weight.scaled_reach(&res.alpha, cfg.eta).min(n as u64);
            if reach == 0 {
                continue;
            }
            let mut out: Vec<u32> = bfs
                .run(g, c.members.iter().copied(), reach)
                .iter()
                .map(|&v| res.cluster_of[v as usize])
                .filter(|&j| j != i as u32 && j != u32::MAX)
                .collect();
            out.sort_unstable();
            out.dedup();
            succ[i] = out;
        }
        EtaIndex { g, res, succ, cache: FxHashMap::default() }
    }

    pub fn successors(&self, i: usize) -> &[u32] {
        &self.succ[i]
    }

    /// Eta-stabiliser of cluster `i` and its outer boundary.
    pub fn stabiliser(&mut self, i: usize) -> &(VertexSet, Vec<Vertex>) {
        if !self.cache.contains_key(&(i as u32)) {
            let mut seen = vec![false; self.res.clusters.len()];
            let mut stack = vec![i];
            seen[i] = true;
            let mut members = Vec::new();
            while let Some(c) = stack.pop() {
                members.extend_from_slice(&self.res.clusters[c].members);
                for &j in &self.succ[c] {
                    if !seen[j as usize] {
                        seen[j as usize] = true;
                        stack.push(j as usize);
                    }
                }
            }
            let set: VertexSet = members.into_iter().collect();
            let boundary = outer_boundary(self.g, &set);
            self.cache.insert(i as u32, (set, boundary));
        }
        &self.cache[&(i as u32)]
    }
}

/// Vertices outside `set` with a neighbour in `set`, sorted.
pub fn outer_boundary(g: &Graph, set: &VertexSet) -> Vec<Vertex> {
    let mut out: Vec<Vertex> =
        set.iter().flat_map(|&v| g.neighbors(v).iter().copied()).filter(|&w| !set.contains(w)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Eta-stabiliser of cluster `i`.
pub fn eta_stabiliser<W: Weight>(g: &WeightedGraph<W>, res: &CmpResult<W>, i: usize, cfg: &EtaConfig) -> VertexSet {
    EtaIndex::new(g.graph(), res, cfg).stabiliser(i).0.clone()
}

/// A failure of `eta r^alpha <= d(x, y) <= 1 + gamma r^alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaViolation {
    pub x: Vertex,
    pub y: Vertex,
    /// `None` when `y` is farther than the upper bound allows.
    pub distance: Option<u32>,
    pub lower: f64,
    pub upper: f64,
}

/// Checks both distance bounds for every `x` and every `y` on the outer
/// boundary of the eta-stabiliser of `x`. Returns the violations.
pub fn check_eta_distance_bounds<W: Weight>(
    g: &WeightedGraph<W>,
    res: &CmpResult<W>,
    cfg: &EtaConfig,
) -> Result<Vec<EtaViolation>, EtaError> {
    let alpha = res.alpha.value();
    if res.alpha.is_one() {
        return Err(EtaError::AlphaOne);
    }
    let gam = gamma(alpha, cfg.eta.value());
    let n = g.n();
    let mut index = EtaIndex::new(g.graph(), res, cfg);
    let mut bfs = Bfs::new(n);
    let mut out = Vec::new();
    for i in 0..res.clusters.len() {
        let (_, boundary) = index.stabiliser(i).clone();
        if boundary.is_empty() {
            continue;
        }
        let c = &res.clusters[i];
        let ra = c.weight.to_f64().powf(alpha);
        let lower = cfg.eta.value() * ra;
        let upper = 1.0 + gam * ra;
        let radius = (upper * (1.0 + REL_TOL)).floor() as u64;
        for &x in &c.members {
            bfs.run(g.graph(), [x], radius.min(n as u64));
            for &y in &boundary {
                let d = bfs.dist(y);
                let ok = match d {
                    Some(d) => (d as f64) >= lower * (1.0 - REL_TOL) && (d as f64) <= upper * (1.0 + REL_TOL),
                    None => false,
                };
                if !ok {
                    out.push(EtaViolation { x, y, distance: d, lower, upper });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainMode {
    /// Every simple chain was listed.
    Exhaustive,
    /// Minimum chain cost per endpoint pair by a shortest-path search, which
    /// covers every chain from the start vertices searched. Random chains are
    /// also sampled as a cross-check.
    MinCost,
}

/// Outcome of [`check_chain_costs`].
#[derive(Clone, Debug)]
pub struct ChainReport {
    pub mode: ChainMode,
    pub beta: f64,
    /// Chains listed (exhaustive) or sampled.
    pub chains: usize,
    /// Endpoint pairs covered by the weak inequality.
    pub weak_checks: usize,
    /// Smallest `cost / d^(beta/alpha)` seen over pairs with `d > 0`.
    pub weak_min_ratio: f64,
    /// Whether the strong inequality applied to this cluster.
    pub strong_applies: bool,
    pub strong_checks: usize,
    /// Smallest `cost / (beta r~(C)^beta)` over chains leaving the stabiliser.
    pub strong_min_ratio: f64,
    pub violations: Vec<ChainViolation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainViolation {
    pub strong: bool,
    pub start: Vertex,
    pub end: Vertex,
    pub cost: f64,
    pub bound: f64,
}

struct ChainCtx<'b> {
    region: &'b [bool],
    cost: &'b [f64],
    succ: &'b FxHashMap<Vertex, Vec<Vertex>>,
}

/// Checks `sum_{i<n} r~(C_{x_i})^beta >= d(x_0, x_n)^(beta/alpha)` over chains
/// `x_0 -> ... -> x_n` of `G^eta` with `x_i` in `S^eta_C \ C` for `i < n`, and,
/// when `r(C) >= 100`, `beta <= 1.01`, `d(x_0, C) = 1` and `x_n` lies on the
/// outer boundary of `S^eta_C`, the stronger `sum >= beta r~(C)^beta`.
pub fn check_chain_costs<W: Weight>(
    g: &WeightedGraph<W>,
    res: &CmpResult<W>,
    cfg: &EtaConfig,
    beta: f64,
    c: usize,
    sample_budget: usize,
    rng: &mut StreamRng,
) -> Result<ChainReport, EtaError> {
    let alpha = res.alpha.value();
    if !(1.0..=alpha).contains(&beta) {
        return Err(EtaError::BetaRange { beta, max: alpha });
    }
    if c >= res.clusters.len() {
        return Err(EtaError::BadCluster(c));
    }
    let n = g.n();
    let gr = g.graph();
    let mut index = EtaIndex::new(gr, res, cfg);
    let (stab, stab_boundary) = index.stabiliser(c).clone();
    let cluster = &res.clusters[c];
    let in_c = VertexSet::from_sorted(cluster.members.clone());
    let region_set = stab.difference(&in_c);
    let mut region = vec![false; n];
    for &v in &region_set {
        region[v as usize] = true;
    }
    let cost: Vec<f64> = (0..n)
        .map(|v| match res.index_of(v as Vertex) {
            Some(i) => (res.clusters[i].weight.to_f64() + cfg.r_tilde_offset).powf(beta),
            None => f64::INFINITY,
        })
        .collect();
    let mut succ: FxHashMap<Vertex, Vec<Vertex>> = FxHashMap::default();
    for &x in &region_set {
        let i = res.cluster_of[x as usize] as usize;
        succ.insert(x, index.stabiliser(i).1.clone());
    }
    let r_c = cluster.weight.to_f64();
    let strong_applies = r_c >= 100.0 && beta <= 1.01;
    let strong_bound = beta * (r_c + cfg.r_tilde_offset).powf(beta);
    let mut on_stab_boundary = vec![false; n];
    for &y in &stab_boundary {
        on_stab_boundary[y as usize] = true;
    }
    let starts_strong: Vec<Vertex> =
        region_set.iter().copied().filter(|&x| gr.neighbors(x).iter().any(|&w| in_c.contains(w))).collect();

    let ctx = ChainCtx { region: &region, cost: &cost, succ: &succ };
    let mut report = ChainReport {
        mode: ChainMode::Exhaustive,
        beta,
        chains: 0,
        weak_checks: 0,
        weak_min_ratio: f64::INFINITY,
        strong_applies,
        strong_checks: 0,
        strong_min_ratio: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut bfs = Bfs::new(n);
    let exponent = beta / alpha;

    let listed = count_chains(&ctx, &region_set, EXHAUSTIVE_LIMIT);
    if let Some(total) = listed {
        // Walk every simple chain, checking each prefix.
        for &x0 in &region_set {
            bfs.run(gr, [x0], n as u64);
            let dist: Vec<Option<u32>> = (0..n).map(|v| bfs.dist(v as Vertex)).collect();
            let strong_start = strong_applies && starts_strong.contains(&x0);
            let mut path = vec![x0];
            let mut on_path = vec![false; n];
            on_path[x0 as usize] = true;
            walk(&ctx, &mut path, &mut on_path, 0.0, &mut |end, sum| {
                report.weak_checks += 1;
                if let Some(d) = dist[end as usize] {
                    let need = (d as f64).powf(exponent);
                    if d > 0 {
                        report.weak_min_ratio = report.weak_min_ratio.min(sum / need);
                    }
                    if sum < need * (1.0 - REL_TOL) {
                        report.violations.push(ChainViolation { strong: false, start: x0, end, cost: sum, bound: need });
                    }
                }
                if strong_start && on_stab_boundary[end as usize] {
                    report.strong_checks += 1;
                    report.strong_min_ratio = report.strong_min_ratio.min(sum / strong_bound);
                    if sum < strong_bound * (1.0 - REL_TOL) {
                        report.violations.push(ChainViolation {
                            strong: true,
                            start: x0,
                            end,
                            cost: sum,
                            bound: strong_bound,
                        });
                    }
                }
            });
        }
        report.chains = total;
        return Ok(report);
    }

    report.mode = ChainMode::MinCost;
    let weak_sources: Vec<Vertex> = if region_set.len() <= MIN_COST_ALL_SOURCES {
        region_set.iter().copied().collect()
    } else {
        (0..sample_budget).map(|_| region_set.as_slice()[rng.below(region_set.len() as u64) as usize]).collect()
    };
    for &x0 in &weak_sources {
        bfs.run(gr, [x0], n as u64);
        let best = min_costs(&ctx, &[x0], n);
        for (&end, &sum) in &best {
            if let Some(d) = bfs.dist(end) {
                report.weak_checks += 1;
                let need = (d as f64).powf(exponent);
                if d > 0 {
                    report.weak_min_ratio = report.weak_min_ratio.min(sum / need);
                }
                if sum < need * (1.0 - REL_TOL) {
                    report.violations.push(ChainViolation { strong: false, start: x0, end, cost: sum, bound: need });
                }
            }
        }
    }
    if strong_applies && !starts_strong.is_empty() {
        let best = min_costs(&ctx, &starts_strong, n);
        for (&end, &sum) in &best {
            if on_stab_boundary[end as usize] {
                report.strong_checks += 1;
                report.strong_min_ratio = report.strong_min_ratio.min(sum / strong_bound);
                if sum < strong_bound * (1.0 - REL_TOL) {
                    report.violations.push(ChainViolation { strong: true, start: starts_strong[0], end, cost: sum, bound: strong_bound });
                }
            }
        }
    }
    // Random chains, restarted whenever they leave the region.
    let starts = region_set.as_slice();
    let mut sampled = 0;
    while sampled < sample_budget && !starts.is_empty() {
        let x0 = starts[rng.below(starts.len() as u64) as usize];
        bfs.run(gr, [x0], n as u64);
        let mut x = x0;
        let mut sum = 0.0;
        for _ in 0..n {
            let next = &succ[&x];
            if next.is_empty() {
                break;
            }
            sum += cost[x as usize];
            x = next[rng.below(next.len() as u64) as usize];
            if let Some(d) = bfs.dist(x) {
                let need = (d as f64).powf(exponent);
                if sum < need * (1.0 - REL_TOL) {
                    report.violations.push(ChainViolation { strong: false, start: x0, end: x, cost: sum, bound: need });
                }
            }
            if !region[x as usize] {
                break;
            }
        }
        sampled += 1;
    }
    report.chains = sampled;
    Ok(report)
}

/// Number of simple chains of length at least one, or `None` above `limit`.
fn count_chains(ctx: &ChainCtx<'_>, starts: &VertexSet, limit: usize) -> Option<usize> {
    let n = ctx.region.len();
    let mut total = 0usize;
    for &x0 in starts {
        let mut path = vec![x0];
        let mut on_path = vec![false; n];
        on_path[x0 as usize] = true;
        let mut over = false;
        walk_counting(ctx, &mut path, &mut on_path, &mut total, limit, &mut over);
        if over {
            return None;
        }
    }
    Some(total)
}

fn walk_counting(
    ctx: &ChainCtx<'_>,
    path: &mut Vec<Vertex>,
    on_path: &mut [bool],
    total: &mut usize,
    limit: usize,
    over: &mut bool,
) {
    let x = *path.last().unwrap();
    for &y in &ctx.succ[&x] {
        if *over || on_path[y as usize] {
            continue;
        }
        *total += 1;
        if *total > limit {
            *over = true;
            return;
        }
        if ctx.region[y as usize] {
            path.push(y);
            on_path[y as usize] = true;
            walk_counting(ctx, path, on_path, total, limit, over);
            on_path[y as usize] = false;
            path.pop();
        }
    }
}

fn walk(ctx: &ChainCtx<'_>, path: &mut Vec<Vertex>, on_path: &mut [bool], sum: f64, visit: &mut dyn FnMut(Vertex, f64)) {
    let x = *path.last().unwrap();
    let sum = sum + ctx.cost[x as usize];
    for &y in &ctx.succ[&x] {
        if on_path[y as usize] {
            continue;
        }
        visit(y, sum);
        if ctx.region[y as usize] {
            path.push(y);
            on_path[y as usize] = true;
            walk(ctx, path, on_path, sum, visit);
            on_path[y as usize] = false;
            path.pop();
        }
    }
}

/// Least chain cost from `sources` to every reachable endpoint (chains of length >= 1).
fn min_costs(ctx: &ChainCtx<'_>, sources: &[Vertex], n: usize) -> FxHashMap<Vertex, f64> {
    // Settled cost of "being at x having paid for the steps so far".
    let mut at: FxHashMap<Vertex, f64> = FxHashMap::default();
    let mut heap: BinaryHeap<(Reverse<OrdF64>, Vertex)> = BinaryHeap::new();
    for &s in sources {
        heap.push((Reverse(OrdF64(0.0)), s));
    }
    let mut ends: FxHashMap<Vertex, f64> = FxHashMap::default();
    let mut settled = vec![false; n];
    while let Some((Reverse(OrdF64(c)), x)) = heap.pop() {
        if settled[x as usize] {
            continue;
        }
        settled[x as usize] = true;
        at.insert(x, c);
        let out = c + ctx.cost[x as usize];
        for &y in &ctx.succ[&x] {
            let e = ends.entry(y).or_insert(f64::INFINITY);
            if out < *e {
                *e = out;
            }
            if ctx.region[y as usize] && !settled[y as usize] {
                heap.push((Reverse(OrdF64(out)), y));
            }
        }
    }
    ends
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmp::{compute_cmp, stabiliser_iterative, CmpConfig};
    use crate::scalar::Exponent;

    fn eta(num: u64, den: u64) -> EtaConfig {
        EtaConfig::new(Rational::new(num, den).unwrap()).unwrap()
    }

    #[test]
    fn gamma_value() {
        assert!((gamma(2.5, 0.1) - 0.41496).abs() < 1e-4);
    }

    #[test]
    fn eta_stabiliser_on_path() {
        let mut ws = vec![0u64; 21];
        ws[10] = 4;
        let g = WeightedGraph::new(Graph::path(21), ws).unwrap();
        let res = compute_cmp(&g, &CmpConfig::new(Exponent::one()));
        let i = res.index_of(10).unwrap();
        assert_eq!(eta_stabiliser(&g, &res, i, &eta(1, 2)), VertexSet::range(8, 13));
        assert_eq!(eta_stabiliser(&g, &res, i, &eta(1, 1)), stabiliser_iterative(&g, &res, &VertexSet::singleton(10)));
        assert_eq!(eta_stabiliser(&g, &res, i, &eta(1, 5)), VertexSet::singleton(10));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EtaConfig::new(Rational::integer(0)).is_err());
        assert!(EtaConfig::new(Rational::new(3, 2).unwrap()).is_err());
        let g = WeightedGraph::new(Graph::path(3), vec![0u64; 3]).unwrap();
        let res = compute_cmp(&g, &CmpConfig::new(Exponent::one()));
        assert_eq!(check_eta_distance_bounds(&g, &res, &eta(1, 10)), Err(EtaError::AlphaOne));
    }

    #[test]
    fn zero_weights_have_no_violations() {
        let g = WeightedGraph::new(Graph::path(6), vec![0u64; 6]).unwrap();
        let res = compute_cmp(&g, &CmpConfig::new(Exponent::parse("5/2").unwrap()));
        assert!(check_eta_distance_bounds(&g, &res, &eta(1, 10)).unwrap().is_empty());
    }

    #[test]
    fn strong_form_on_long_path() {
        let n = 10_200;
        let mut ws = vec![0u64; n];
        ws[0] = 100;
        let g = WeightedGraph::new(Graph::path(n), ws).unwrap();
        let res = compute_cmp(&g, &CmpConfig::new(Exponent::parse("5/2").unwrap()));
        let mut rng = StreamRng::new(1);
        let rep = check_chain_costs(&g, &res, &eta(1, 10), 1.0, 0, 10, &mut rng).unwrap();
        assert!(rep.strong_applies);
        assert!(rep.strong_checks > 0);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }
}
