//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::VecDeque;

use cmperc_core::graph::{Graph, Vertex};
use cmperc_core::rng::StreamRng;
use cmperc_core::scalar::{Exponent, Weight};

/// All-pairs distances by repeated BFS; `u32::MAX` when disconnected.
pub fn all_pairs(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.n();
    (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s as Vertex]);
            while let Some(u) = q.pop_front() {
                for &w in g.neighbors(u) {
                    if d[w as usize] == u32::MAX {
                        d[w as usize] = d[u as usize] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// Distances in the subgraph induced by `mask`.
pub fn all_pairs_induced(g: &Graph, mask: &[bool]) -> Vec<Vec<u32>> {
    let n = g.n();
    (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            if !mask[s] {
                return d;
            }
            d[s] = 0;
            let mut q = VecDeque::from([s as Vertex]);
            while let Some(u) = q.pop_front() {
                for &w in g.neighbors(u) {
                    if mask[w as usize] && d[w as usize] == u32::MAX {
                        d[w as usize] = d[u as usize] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// `d <= w^alpha` for float weights.
pub fn within_f64(d: u32, w: f64, alpha: &Exponent) -> bool {
    d != u32::MAX && (d as f64) <= w.powf(alpha.value())
}

/// `d <= w^(p/q)` for integer weights, decided as `d^q <= w^p`.
pub fn within_int(d: u32, w: u64, alpha: &Exponent) -> bool {
    if d == u32::MAX {
        return false;
    }
    let p = alpha.rational().numer() as u32;
    let q = alpha.rational().denom() as u32;
    let lhs = num_bigint::BigUint::from(d).pow(q);
    let rhs = num_bigint::BigUint::from(w).pow(p);
    lhs <= rhs
}

/// Pairwise merging until stable, over the vertices of `mask`.
/// Returns the minimum member of each vertex's cluster (`u32::MAX` outside).
pub fn naive_cmp<T, F>(dist: &[Vec<u32>], weights: &[T], mask: &[bool], within: F) -> Vec<u32>
where
    T: Copy + Default + PartialOrd + std::ops::Add<Output = T>,
    F: Fn(u32, T) -> bool,
{
    let n = weights.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        let mut wsum = vec![T::default(); n];
        for v in 0..n {
            if mask[v] {
                wsum[label[v]] = wsum[label[v]] + weights[v];
            }
        }
        'outer: for x in 0..n {
            for y in 0..n {
                if !mask[x] || !mask[y] || label[x] == label[y] {
                    continue;
                }
                let (a, b) = (wsum[label[x]], wsum[label[y]]);
                let m = if a < b { a } else { b };
                if within(dist[x][y], m) {
                    let (a, b) = (label[x], label[y]);
                    for l in label.iter_mut() {
                        if *l == b {
                            *l = a;
                        }
                    }
                    changed = true;
                    break 'outer;
                }
            }
        }
        if !changed {
            break;
        }
    }
    canonical(&label, mask)
}

pub fn canonical(label: &[usize], mask: &[bool]) -> Vec<u32> {
    let n = label.len();
    let mut min_of = vec![u32::MAX; n];
    for v in 0..n {
        if mask[v] {
            min_of[label[v]] = min_of[label[v]].min(v as u32);
        }
    }
    (0..n).map(|v| if mask[v] { min_of[label[v]] } else { u32::MAX }).collect()
}

/// Random connected-ish graph: a spanning path plus random extra edges.
pub fn random_graph(n: usize, extra: usize, rng: &mut StreamRng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.below(v as u64) as u32;
        edges.push((u, v as u32));
    }
    for _ in 0..extra {
        let a = rng.below(n as u64) as u32;
        let b = rng.below(n as u64) as u32;
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    Graph::from_edges_dedup(n, &edges).unwrap()
}

/// Small integer weights, mostly zero and one, sometimes larger.
pub fn random_int_weights(n: usize, p_nonzero: f64, max: u64, rng: &mut StreamRng) -> Vec<u64> {
    (0..n)
        .map(|_| if rng.uniform() < p_nonzero { 1 + rng.below(max) } else { 0 })
        .collect()
}

pub fn as_f64<W: Weight>(ws: &[W]) -> Vec<f64> {
    ws.iter().map(|w| w.to_f64()).collect()
}

/// Transition rates of the contact process on `g` restricted to `w`, with
/// states encoded as bit masks over the vertices of `g` (at most 16).
fn contact_rates(g: &Graph, w: &[bool], lambda: f64, s: usize) -> Vec<(usize, f64)> {
    let n = g.n();
    let mut out = Vec::new();
    for x in 0..n {
        if s >> x & 1 == 1 {
            out.push((s & !(1 << x), 1.0));
        } else if w[x] {
            let k = g.neighbors(x as Vertex).iter().filter(|&&y| s >> y & 1 == 1).count();
            if k > 0 {
                out.push((s | 1 << x, lambda * k as f64));
            }
        }
    }
    out
}

/// Law of the restricted contact process at time `t` from state `start`, by
/// uniformization of the generator.
pub fn contact_law(g: &Graph, w: &[bool], lambda: f64, start: usize, t: f64) -> Vec<f64> {
    let n = g.n();
    assert!(n <= 16);
    let states = 1usize << n;
    let rates: Vec<Vec<(usize, f64)>> = (0..states).map(|s| contact_rates(g, w, lambda, s)).collect();
    let exit: Vec<f64> = rates.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
    let big = exit.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let mut cur = vec![0.0; states];
    cur[start] = 1.0;
    let mut law = vec![0.0; states];
    let mut weight = (-big * t).exp();
    let mut k = 0u64;
    let mut acc = 0.0;
    loop {
        for s in 0..states {
            law[s] += weight * cur[s];
        }
        acc += weight;
        if acc > 1.0 - 1e-14 || k > 100_000 {
            break;
        }
        let mut next = vec![0.0; states];
        for s in 0..states {
            if cur[s] == 0.0 {
                continue;
            }
            next[s] += cur[s] * (1.0 - exit[s] / big);
            for &(to, r) in &rates[s] {
                next[to] += cur[s] * r / big;
            }
        }
        cur = next;
        k += 1;
        weight *= big * t / k as f64;
    }
    law
}

/// Probability that each vertex is infected at time `t`.
pub fn occupation(g: &Graph, w: &[bool], lambda: f64, start: usize, t: f64) -> Vec<f64> {
    let law = contact_law(g, w, lambda, start, t);
    (0..g.n()).map(|x| law.iter().enumerate().filter(|(s, _)| s >> x & 1 == 1).map(|(_, p)| p).sum()).collect()
}

/// Mean time to extinction from `start`, by solving the linear system of
/// the embedded chain with Gaussian elimination.
pub fn mean_extinction(g: &Graph, w: &[bool], lambda: f64, start: usize) -> f64 {
    let states = 1usize << g.n();
    // Unknowns: E[s] for s != 0. Equation: exit(s) E[s] - sum rate E[to] = 1.
    let m = states - 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for s in 1..states {
        let row = &mut a[s - 1];
        for (to, r) in contact_rates(g, w, lambda, s) {
            row[s - 1] += r;
            if to != 0 {
                row[to - 1] -= r;
            }
        }
        row[m] = 1.0;
    }
    solve(&mut a);
    a[start - 1][m] / a[start - 1][start - 1]
}

/// The word `A_1 = 11`, `A_{k+1} = A_k 0^{2^k - 1} A_k`.
pub fn a_word(n: u32) -> Vec<u64> {
    let mut w = vec![1, 1];
    for k in 1..n {
        let mut next = w.clone();
        next.extend(std::iter::repeat(0).take((1usize << k) - 1));
        next.extend_from_slice(&w);
        w = next;
    }
    w
}

/// Expected total time vertex `x` is infected before extinction, from `start`.
pub fn mean_time_infected(g: &Graph, w: &[bool], lambda: f64, start: usize, x: usize) -> f64 {
    let states = 1usize << g.n();
    let m = states - 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for s in 1..states {
        let row = &mut a[s - 1];
        for (to, r) in contact_rates(g, w, lambda, s) {
            row[s - 1] += r;
            if to != 0 {
                row[to - 1] -= r;
            }
        }
        row[m] = (s >> x & 1) as f64;
    }
    solve(&mut a);
    a[start - 1][m] / a[start - 1][start - 1]
}

fn solve(a: &mut [Vec<f64>]) {
    let m = a.len();
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for i in 0..m {
            if i != c && a[i][c] != 0.0 {
                let f = a[i][c] / a[c][c];
                for j in c..=m {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
}
