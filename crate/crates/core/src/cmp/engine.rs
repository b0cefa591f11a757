//! Incremental merge engine shared by partition, stability and exploration code.
//!
//! Clusters live in a union-find forest. A cluster is rescanned only after it
//! changes; partners are found by a bounded search from its members. Large
//! clusters keep a distance field that is updated incrementally, so that the
//! only vertices inspected after a merge are those whose distance dropped.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::graph::{Bfs, Graph, Vertex};
use crate::rng::StreamRng;
use crate::scalar::{Exponent, Rational, Weight};

/// Clusters with at least this many members switch to an incremental field.
const FIELD_THRESHOLD: usize = 48;

#[derive(Clone, Debug, Default)]
struct Field {
    dist: FxHashMap<Vertex, u32>,
    radius: u64,
    /// Vertices at distance `radius` (may hold stale entries).
    outer: Vec<Vertex>,
    /// Vertices inserted since the last call to `take_fresh`.
    fresh: Vec<Vertex>,
}

#[derive(Clone, Debug)]
struct State<W> {
    weight: W,
    reach: u64,
    members: Vec<Vertex>,
    field: Option<Box<Field>>,
    /// Members not yet used as sources of `field`.
    pending: Vec<Vertex>,
}

/// How the distance between clusters is measured when the domain is partial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Paths may leave the domain.
    Ambient,
    /// Paths stay inside the domain.
    Induced,
}

pub struct Merger<'a, W: Weight> {
    g: &'a Graph,
    weights: &'a [W],
    alpha: Exponent,
    scale: Rational,
    metric: Metric,
    parent: Vec<Vertex>,
    state: Vec<Option<Box<State<W>>>>,
    /// Reach of each singleton, valid for domain vertices.
    vreach: Vec<u64>,
    domain: Option<Vec<bool>>,
    domain_size: usize,
    queue: VecDeque<Vertex>,
    queued: Vec<bool>,
    bfs: Bfs,
    scratch: Vec<Vertex>,
    order_rng: Option<StreamRng>,
    /// Roots changed since the last `drain_dirty`.
    dirty: Vec<Vertex>,
    track_dirty: bool,
    pub merges: u64,
}

impl<'a, W: Weight> Merger<'a, W> {
    /// Engine over all vertices of `g`; every vertex starts as a singleton.
    pub fn full(g: &'a Graph, weights: &'a [W], alpha: Exponent) -> Self {
        let mut m = Self::empty(g, weights, alpha, Metric::Ambient);
        m.domain = None;
        m.domain_size = g.n();
        for v in 0..g.n() as Vertex {
            m.init_vertex(v);
        }
        m
    }

    /// Engine over the vertices of `mask` only.
    pub fn restricted(g: &'a Graph, weights: &'a [W], alpha: Exponent, mask: &[bool], metric: Metric) -> Self {
        let mut m = Self::empty(g, weights, alpha, metric);
        for (v, &inside) in mask.iter().enumerate() {
            if inside {
                m.add_vertex(v as Vertex);
            }
        }
        m
    }

    /// Engine with an empty domain that grows through [`Merger::add_vertex`].
    pub fn empty(g: &'a Graph, weights: &'a [W], alpha: Exponent, metric: Metric) -> Self {
        let n = g.n();
        Merger {
            g,
            weights,
            alpha,
            scale: Rational::integer(1),
            metric,
            parent: (0..n as Vertex).collect(),
            state: Vec::new(),
            vreach: vec![0; n],
            domain: Some(vec![false; n]),
            domain_size: 0,
            queue: VecDeque::new(),
            queued: vec![false; n],
            bfs: Bfs::new(n),
            scratch: Vec::new(),
            order_rng: None,
            dirty: Vec::new(),
            track_dirty: false,
            merges: 0,
        }
    }

    /// Processes the worklist in a random order drawn from `rng`.
    pub fn shuffled(mut self, rng: StreamRng) -> Self {
        self.order_rng = Some(rng);
        self
    }

    pub fn track_dirty(&mut self, on: bool) {
        self.track_dirty = on;
    }

    fn init_vertex(&mut self, v: Vertex) {
        let r = self.weights[v as usize].reach(&self.alpha);
        self.vreach[v as usize] = r;
        if r >= 1 {
            self.enqueue(v);
        }
        if self.track_dirty {
            self.dirty.push(v);
        }
    }

    /// Adds `v` to the domain as a singleton. Returns `false` if already present.
    pub fn add_vertex(&mut self, v: Vertex) -> bool {
        let dom = self.domain.as_mut().expect("full engines have a fixed domain");
        if dom[v as usize] {
            return false;
        }
        dom[v as usize] = true;
        self.domain_size += 1;
        self.init_vertex(v);
        true
    }

    #[inline]
    pub fn in_domain(&self, v: Vertex) -> bool {
        match &self.domain {
            None => true,
            Some(d) => d[v as usize],
        }
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn find(&mut self, mut v: Vertex) -> Vertex {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[v as usize] != root {
            let next = self.parent[v as usize];
            self.parent[v as usize] = root;
            v = next;
        }
        root
    }

    fn find_const(&self, mut v: Vertex) -> Vertex {
        while self.parent[v as usize] != v {
            v = self.parent[v as usize];
        }
        v
    }

    fn state_of(&self, root: Vertex) -> Option<&State<W>> {
        self.state.get(root as usize).and_then(|s| s.as_deref())
    }

    /// Reach `floor(r(C)^alpha)` of the cluster rooted at `root`.
    pub fn reach(&self, root: Vertex) -> u64 {
        match self.state_of(root) {
            Some(s) => s.reach,
            None => self.vreach[root as usize],
        }
    }

    pub fn weight(&self, root: Vertex) -> W {
        match self.state_of(root) {
            Some(s) => s.weight.clone(),
            None => self.weights[root as usize].clone(),
        }
    }

    pub fn members(&self, root: Vertex) -> &[Vertex] {
        match self.state_of(root) {
            Some(s) => &s.members,
            None => std::slice::from_ref(&self.parent[root as usize]),
        }
    }

    fn enqueue(&mut self, root: Vertex) {
        if !self.queued[root as usize] {
            self.queued[root as usize] = true;
            self.queue.push_back(root);
        }
    }

    fn pop(&mut self) -> Option<Vertex> {
        match &mut self.order_rng {
            None => self.queue.pop_front(),
            Some(rng) => {
                if self.queue.is_empty() {
                    return None;
                }
                let i = rng.below(self.queue.len() as u64) as usize;
                self.queue.swap_remove_back(i)
            }
        }
    }

    fn take_state(&mut self, root: Vertex) -> Box<State<W>> {
        if self.state.len() <= root as usize {
            self.state.resize_with(self.g.n(), || None);
        }
        match self.state[root as usize].take() {
            Some(s) => s,
            None => Box::new(State {
                weight: self.weights[root as usize].clone(),
                reach: self.vreach[root as usize],
                members: vec![root],
                field: None,
                pending: Vec::new(),
            }),
        }
    }

    /// Merges the clusters rooted at `a` and `b`, returning the new root.
    pub fn union(&mut self, a: Vertex, b: Vertex) -> Vertex {
        debug_assert!(a != b);
        let mut sa = self.take_state(a);
        let mut sb = self.take_state(b);
        let (big, small, mut s_big, mut s_small) = if sa.members.len() >= sb.members.len() {
            (a, b, sa, sb)
        } else {
            std::mem::swap(&mut sa, &mut sb);
            (b, a, sa, sb)
        };
        self.parent[small as usize] = big;
        s_big.weight += &s_small.weight;
        s_big.reach = s_big.weight.scaled_reach(&self.alpha, self.scale);
        let field_size = |s: &State<W>| s.field.as_ref().map_or(0, |f| f.dist.len() + 1);
        if field_size(&s_small) > field_size(&s_big) {
            // Keep the larger field; the other side's members become sources.
            s_small.pending.extend_from_slice(&s_big.members);
            s_big.pending = std::mem::take(&mut s_small.pending);
            s_big.field = s_small.field.take();
        } else if s_big.field.is_some() {
            s_big.pending.extend_from_slice(&s_small.members);
        }
        s_big.members.append(&mut s_small.members);
        self.state[big as usize] = Some(s_big);
        self.merges += 1;
        if self.track_dirty {
            self.dirty.push(big);
        }
        big
    }

    /// Runs merges until no two clusters of the domain are within range.
    pub fn run(&mut self) {
        while let Some(c) = self.pop() {
            self.queued[c as usize] = false;
            if self.find_const(c) != c {
                continue;
            }
            self.process(c);
        }
    }

    fn process(&mut self, c: Vertex) {
        let reach = self.reach(c);
        if reach == 0 {
            return;
        }
        let radius = reach.min(self.g.n() as u64);
        let use_field = self.members(c).len() >= FIELD_THRESHOLD || self.state_of(c).is_some_and(|s| s.field.is_some());
        let mut partners = std::mem::take(&mut self.scratch);
        partners.clear();
        if use_field {
            let mut st = self.take_state(c);
            if st.field.is_none() {
                st.field = Some(Box::default());
                st.pending = st.members.clone();
            }
            let pending = std::mem::take(&mut st.pending);
            let field = st.field.as_mut().unwrap();
            let changed = update_field(self.g, field, &pending, radius, self.metric, self.domain.as_deref());
            for v in changed {
                if !self.in_domain(v) {
                    continue;
                }
                let r = self.find(v);
                if r != c && (field.dist[&v] as u64) <= self.reach(r) {
                    partners.push(r);
                }
            }
            self.state[c as usize] = Some(st);
        } else {
            let members = self.members(c).to_vec();
            let domain = self.domain.as_deref();
            let allow = |w: Vertex| self.metric == Metric::Ambient || domain.is_none_or(|d| d[w as usize]);
            let visited = self.bfs.run_filtered(self.g, members, radius, allow).to_vec();
            for v in visited {
                if !self.in_domain(v) {
                    continue;
                }
                let r = self.find(v);
                if r != c && (self.bfs.dist(v).unwrap() as u64) <= self.reach(r) {
                    partners.push(r);
                }
            }
        }
        if let Some(rng) = &mut self.order_rng {
            rng.shuffle(&mut partners);
        }
        let mut root = c;
        for &p in &partners {
            let p = self.find(p);
            if p != root {
                root = self.union(root, p);
            }
        }
        if root != c || !partners.is_empty() {
            self.enqueue(root);
        }
        self.scratch = partners;
    }

    /// Roots touched since the last call, deduplicated and resolved.
    pub fn drain_dirty(&mut self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = std::mem::take(&mut self.dirty);
        for v in out.iter_mut() {
            *v = self.find(*v);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the cluster's field is current, in which case its ball is known.
    pub fn has_current_field(&self, root: Vertex) -> bool {
        self.state_of(root)
            .is_some_and(|s| s.pending.is_empty() && s.field.as_ref().is_some_and(|f| f.radius == s.reach.min(self.g.n() as u64)))
    }

    /// Vertices that entered the cluster's field since the previous call.
    pub fn take_fresh(&mut self, root: Vertex) -> Vec<Vertex> {
        match self.state.get_mut(root as usize).and_then(|s| s.as_mut()) {
            Some(s) => s.field.as_mut().map(|f| std::mem::take(&mut f.fresh)).unwrap_or_default(),
            None => Vec::new(),
        }
    }

    /// Ball `B(C, reach)` by direct search, respecting the metric.
    pub fn ball_of(&mut self, root: Vertex) -> Vec<Vertex> {
        let radius = self.reach(root).min(self.g.n() as u64);
        let members = self.members(root).to_vec();
        let domain = self.domain.as_deref();
        let metric = self.metric;
        let allow = |w: Vertex| metric == Metric::Ambient || domain.is_none_or(|d| d[w as usize]);
        self.bfs.run_filtered(self.g, members, radius, allow).to_vec()
    }

    /// Cluster label (minimum member) for every domain vertex; `u32::MAX` outside.
    pub fn labels(&mut self) -> Vec<Vertex> {
        let n = self.g.n();
        let mut min_of = vec![u32::MAX; n];
        let mut out = vec![u32::MAX; n];
        for v in 0..n as Vertex {
            if self.in_domain(v) {
                let r = self.find(v);
                if v < min_of[r as usize] {
                    min_of[r as usize] = v;
                }
            }
        }
        for v in 0..n as Vertex {
            if self.in_domain(v) {
                out[v as usize] = min_of[self.find_const(v) as usize];
            }
        }
        out
    }

    /// Current roots of the domain.
    pub fn roots(&self) -> Vec<Vertex> {
        (0..self.g.n() as Vertex).filter(|&v| self.in_domain(v) && self.parent[v as usize] == v).collect()
    }
}

/// Lowers `field` to the distance from its old sources plus `pending`, out to
/// `radius`. Returns the vertices whose distance decreased or appeared.
fn update_field(
    g: &Graph,
    field: &mut Field,
    pending: &[Vertex],
    radius: u64,
    metric: Metric,
    domain: Option<&[bool]>,
) -> Vec<Vertex> {
    let allow = |w: Vertex| metric == Metric::Ambient || domain.is_none_or(|d| d[w as usize]);
    let mut changed = Vec::new();
    let mut cur: Vec<Vertex> = Vec::new();
    for &s in pending {
        match field.dist.insert(s, 0) {
            Some(0) => {}
            old => {
                if old.is_none() {
                    field.fresh.push(s);
                }
                changed.push(s);
                cur.push(s);
            }
        }
    }
    let old_radius = field.radius;
    let mut inject = if radius > old_radius { std::mem::take(&mut field.outer) } else { Vec::new() };
    let inject_level = old_radius;
    let mut level: u64 = 0;
    loop {
        if level == inject_level && !inject.is_empty() {
            for v in inject.drain(..) {
                if field.dist.get(&v).is_some_and(|&d| d as u64 == inject_level) {
                    cur.push(v);
                }
            }
        }
        if level >= radius {
            break;
        }
        if cur.is_empty() {
            if !inject.is_empty() && inject_level > level {
                level = inject_level;
                continue;
            }
            break;
        }
        let nd = (level + 1) as u32;
        let mut next = Vec::new();
        for &u in &cur {
            if field.dist.get(&u).copied() != Some(level as u32) {
                continue;
            }
            for &w in g.neighbors(u) {
                if !allow(w) {
                    continue;
                }
                let slot = field.dist.entry(w);
                match slot {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        if *e.get() > nd {
                            e.insert(nd);
                            changed.push(w);
                            next.push(w);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(nd);
                        field.fresh.push(w);
                        changed.push(w);
                        next.push(w);
                    }
                }
            }
        }
        cur = next;
        level += 1;
    }
    let at_radius = level == radius;
    if radius > old_radius {
        field.outer = if at_radius { cur } else { Vec::new() };
    } else if at_radius {
        field.outer.extend(cur);
    }
    field.radius = radius;
    changed
}
