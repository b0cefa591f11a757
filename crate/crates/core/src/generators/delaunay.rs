//! Planar Delaunay triangulation by incremental insertion.
//!
//! The convex hull is closed off with triangles on a ghost vertex at
//! infinity, so no bounding super-triangle is needed. A point conflicts
//! with a real triangle when it lies strictly inside its circumcircle, and
//! with a ghost triangle `(a, b, ghost)` when it lies strictly outside the
//! hull edge `ab` or in the open segment `ab`. Cocircular configurations are
//! resolved afterwards by flipping each such diagonal to the
//! lexicographically smaller one.

use std::cmp::Ordering;

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::predicates::{incircle, orient2d};
use crate::graph::Vertex;
use crate::rng::StreamRng;

const GHOST: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum DelaunayError {
    #[error("need at least 3 points, got {0}")]
    TooFew(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("duplicate point {0} and {1}")]
    Duplicate(Vertex, Vertex),
    #[error("non-finite coordinate at point {0}")]
    NonFinite(Vertex),
}

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [u32; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [u32; 3],
    alive: bool,
}

impl Tri {
    fn is_ghost(&self) -> bool {
        self.v.contains(&GHOST)
    }

    fn slot_of(&self, v: u32) -> usize {
        self.v.iter().position(|&x| x == v).expect("vertex of triangle")
    }

    fn slot_of_neighbor(&self, t: u32) -> usize {
        self.n.iter().position(|&x| x == t).expect("neighbour of triangle")
    }
}

/// Output of [`triangulate`].
#[derive(Clone, Debug)]
pub struct Triangulation {
    /// Counter-clockwise triangles over point indices.
    pub triangles: Vec<[Vertex; 3]>,
    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(Vertex, Vertex)>,
    /// Vertices on the convex hull (including collinear hull points), sorted.
    pub hull: Vec<Vertex>,
}

struct Builder<'a> {
    pts: &'a [[f64; 2]],
    tris: Vec<Tri>,
    free: Vec<u32>,
    last: u32,
    rng: StreamRng,
}

impl Builder<'_> {
    fn p(&self, v: u32) -> [f64; 2] {
        self.pts[v as usize]
    }

    fn conflicts(&self, t: u32, q: u32) -> bool {
        let tri = &self.tris[t as usize];
        let pq = self.p(q);
        if tri.is_ghost() {
            let g = tri.slot_of(GHOST);
            let a = tri.v[(g + 1) % 3];
            let b = tri.v[(g + 2) % 3];
            let (pa, pb) = (self.p(a), self.p(b));
            match orient2d(pa, pb, pq) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => strictly_between(pa, pb, pq),
            }
        } else {
            let [a, b, c] = tri.v;
            incircle(self.p(a), self.p(b), self.p(c), pq) == Ordering::Greater
        }
    }

    fn alloc(&mut self, t: Tri) -> u32 {
        match self.free.pop() {
            Some(i) => {
                self.tris[i as usize] = t;
                i
            }
            None => {
                self.tris.push(t);
                (self.tris.len() - 1) as u32
            }
        }
    }

    /// A triangle in conflict with `q`, found by a visibility walk.
    fn locate(&mut self, q: u32) -> Result<u32, DelaunayError> {
        let pq = self.p(q);
        let mut t = self.last;
        if !self.tris[t as usize].alive {
            t = self.tris.iter().position(|t| t.alive).unwrap() as u32;
        }
        if self.tris[t as usize].is_ghost() {
            if self.conflicts(t, q) {
                return Ok(t);
            }
            let g = self.tris[t as usize].slot_of(GHOST);
            t = self.tris[t as usize].n[g];
        }
        let mut steps = 0usize;
        loop {
            let tri = self.tris[t as usize];
            if tri.is_ghost() {
                return Ok(t);
            }
            let start = self.rng.below(3) as usize;
            let mut moved = false;
            for k in 0..3 {
                let i = (start + k) % 3;
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if orient2d(self.p(a), self.p(b), pq) == Ordering::Less {
                    t = tri.n[i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                for &v in &tri.v {
                    if self.p(v) == pq {
                        return Err(DelaunayError::Duplicate(v.min(q), v.max(q)));
                    }
                }
                return Ok(t);
            }
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                // Fall back to a scan rather than walk indefinitely.
                for t in 0..self.tris.len() as u32 {
                    if self.tris[t as usize].alive && self.conflicts(t, q) {
                        return Ok(t);
                    }
                }
                unreachable!("every point conflicts with some triangle");
            }
        }
    }

    fn insert(&mut self, q: u32) -> Result<(), DelaunayError> {
        let start = self.locate(q)?;
        let mut cavity = vec![start];
        let mut in_cavity: FxHashMap<u32, ()> = FxHashMap::default();
        in_cavity.insert(start, ());
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for &nb in &self.tris[t as usize].n {
                if !in_cavity.contains_key(&nb) && self.conflicts(nb, q) {
                    in_cavity.insert(nb, ());
                    cavity.push(nb);
                }
            }
        }
        // Boundary edges (a, b) in counter-clockwise order, with the outside triangle.
        let mut boundary = Vec::new();
        for &t in &cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if !in_cavity.contains_key(&nb) {
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb));
                }
            }
        }
        for &t in &cavity {
            self.tris[t as usize].alive = false;
            self.free.push(t);
        }
        let mut by_start: FxHashMap<u32, u32> = FxHashMap::default();
        let mut by_end: FxHashMap<u32, u32> = FxHashMap::default();
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            let t = self.alloc(Tri { v: [a, b, q], n: [NONE, NONE, outside], alive: true });
            let o = &mut self.tris[outside as usize];
            let i = (0..3).find(|&i| o.v[(i + 1) % 3] == b && o.v[(i + 2) % 3] == a).expect("shared edge");
            o.n[i] = t;
            by_start.insert(a, t);
            by_end.insert(b, t);
            created.push(t);
        }
        for &t in &created {
            let [a, b, _] = self.tris[t as usize].v;
            // Edge (b, q) is opposite a; edge (q, a) is opposite b.
            let next = by_start[&b];
            self.tris[t as usize].n[0] = next;
            self.tris[t as usize].n[1] = by_end[&a];
        }
        self.last = created[0];
        Ok(())
    }

    /// Flips cocircular diagonals to the lexicographically smaller one.
    fn tie_break(&mut self) {
        loop {
            let mut flipped = false;
            for t in 0..self.tris.len() as u32 {
                let tri = self.tris[t as usize];
                if !tri.alive || tri.is_ghost() {
                    continue;
                }
                for i in 0..3 {
                    let u = tri.n[i];
                    let other = self.tris[u as usize];
                    if other.is_ghost() {
                        continue;
                    }
                    let c = tri.v[i];
                    let a = tri.v[(i + 1) % 3];
                    let b = tri.v[(i + 2) % 3];
                    let j = other.slot_of_neighbor(t);
                    let d = other.v[j];
                    if incircle(self.p(a), self.p(b), self.p(c), self.p(d)) != Ordering::Equal {
                        continue;
                    }
                    let cur = (a.min(b), a.max(b));
                    let alt = (c.min(d), c.max(d));
                    if alt >= cur {
                        continue;
                    }
                    let convex = orient2d(self.p(c), self.p(d), self.p(a)) != orient2d(self.p(c), self.p(d), self.p(b))
                        && orient2d(self.p(c), self.p(d), self.p(a)) != Ordering::Equal
                        && orient2d(self.p(c), self.p(d), self.p(b)) != Ordering::Equal;
                    if !convex {
                        continue;
                    }
                    self.flip(t, i);
                    flipped = true;
                    break;
                }
            }
            if !flipped {
                break;
            }
        }
    }

    /// Replaces the edge opposite slot `i` of `t` by the other diagonal.
    fn flip(&mut self, t: u32, i: usize) {
        let tri = self.tris[t as usize];
        let u = tri.n[i];
        let other = self.tris[u as usize];
        let c = tri.v[i];
        let a = tri.v[(i + 1) % 3];
        let b = tri.v[(i + 2) % 3];
        let j = other.slot_of_neighbor(t);
        let d = other.v[j];
        // Outer neighbours: across (b, c) and (c, a) in t, across (a, d) and (d, b) in u.
        let n_bc = tri.n[(i + 1) % 3];
        let n_ca = tri.n[(i + 2) % 3];
        let da = other.slot_of(a);
        let db = other.slot_of(b);
        let n_ad = other.n[db];
        let n_db = other.n[da];
        // New triangles (c, a, d) and (d, b, c).
        self.tris[t as usize] = Tri { v: [c, a, d], n: [n_ad, u, n_ca], alive: true };
        self.tris[u as usize] = Tri { v: [d, b, c], n: [n_bc, t, n_db], alive: true };
        self.relink(n_ad, u, t);
        self.relink(n_bc, t, u);
    }

    fn relink(&mut self, at: u32, old: u32, new: u32) {
        let k = self.tris[at as usize].slot_of_neighbor(old);
        self.tris[at as usize].n[k] = new;
    }
}

fn strictly_between(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let within = |x: f64, y: f64, z: f64| (x < z && z < y) || (y < z && z < x);
    if a[0] != b[0] {
        within(a[0], b[0], p[0])
    } else {
        within(a[1], b[1], p[1])
    }
}

/// Delaunay triangulation of `pts`. Insertion order follows a grid snake
/// traversal; `seed` drives the walk's edge choice only.
pub fn triangulate(pts: &[[f64; 2]], seed: u64) -> Result<Triangulation, DelaunayError> {
    let n = pts.len();
    if n < 3 {
        return Err(DelaunayError::TooFew(n));
    }
    for (i, p) in pts.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(DelaunayError::NonFinite(i as Vertex));
        }
    }
    let order = insertion_order(pts);
    let a = order[0];
    let mut rest = Vec::with_capacity(n);
    let mut b = None;
    let mut c = None;
    for &v in &order[1..] {
        if b.is_none() {
            if pts[v as usize] == pts[a as usize] {
                return Err(DelaunayError::Duplicate(a.min(v), a.max(v)));
            }
            b = Some(v);
        } else if c.is_none() && orient2d(pts[a as usize], pts[b.unwrap() as usize], pts[v as usize]) != Ordering::Equal {
            c = Some(v);
        } else {
            rest.push(v);
        }
    }
    let b = b.unwrap();
    let c = c.ok_or(DelaunayError::Collinear)?;
    let (b, c) =
        if orient2d(pts[a as usize], pts[b as usize], pts[c as usize]) == Ordering::Greater { (b, c) } else { (c, b) };
    let mut bld = Builder { pts, tris: Vec::with_capacity(2 * n + 8), free: Vec::new(), last: 0, rng: StreamRng::new(seed) };
    // Real triangle 0 and ghosts 1..=3 across its edges.
    bld.tris.push(Tri { v: [a, b, c], n: [2, 3, 1], alive: true });
    bld.tris.push(Tri { v: [b, a, GHOST], n: [3, 2, 0], alive: true });
    bld.tris.push(Tri { v: [c, b, GHOST], n: [1, 3, 0], alive: true });
    bld.tris.push(Tri { v: [a, c, GHOST], n: [2, 1, 0], alive: true });
    for v in rest {
        bld.insert(v)?;
    }
    bld.tie_break();

    let mut triangles = Vec::new();
    let mut edges = Vec::new();
    let mut hull = Vec::new();
    for t in bld.tris.iter().filter(|t| t.alive) {
        if t.is_ghost() {
            hull.extend(t.v.iter().copied().filter(|&v| v != GHOST));
            continue;
        }
        triangles.push(t.v);
        for i in 0..3 {
            let (u, v) = (t.v[i], t.v[(i + 1) % 3]);
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    hull.sort_unstable();
    hull.dedup();
    triangles.sort_unstable_by_key(|t| {
        let mut s = *t;
        s.sort_unstable();
        s
    });
    Ok(Triangulation { triangles, edges, hull })
}

/// Snake order over a grid of about one point per cell, so consecutive
/// insertions are close together.
fn insertion_order(pts: &[[f64; 2]]) -> Vec<Vertex> {
    let n = pts.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let side = ((n as f64).sqrt().ceil() as usize).max(1);
    let cell = |x: f64, k: usize| -> usize {
        let w = hi[k] - lo[k];
        if w <= 0.0 {
            0
        } else {
            (((x - lo[k]) / w * side as f64) as usize).min(side - 1)
        }
    };
    let mut keyed: Vec<(usize, usize, u64, Vertex)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let row = cell(p[1], 1);
            let col = cell(p[0], 0);
            let col = if row % 2 == 0 { col } else { side - 1 - col };
            (row, col, p[0].to_bits(), i as Vertex)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|k| k.3).collect()
}
