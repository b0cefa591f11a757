//! The contact process on a finite graph, optionally restricted to a vertex
//! subset `W`.
//!
//! Every vertex carries a rate-1 recovery clock and every oriented edge a
//! rate-`lambda` infection arrow. The restricted process `xi_W` keeps only
//! the arrows between vertices of `W`; an arrow fired from an infected site
//! of `W` towards a vertex outside `W` is counted as an exiting infection and
//! otherwise ignored.
//!
//! Two samplers share these semantics. [`run_contact`] is event driven: each
//! infected site holds one pending exponential clock of rate
//! `1 + lambda * deg(x)`, which by thinning is the superposition of its
//! recovery clock and its outgoing arrows. [`GraphicalConstruction`] draws
//! every Poisson mark up to the horizon explicitly, so that several processes
//! can be driven by the same randomness.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex, VertexSet};
use crate::rng::{derive, StreamRng};
use crate::stats::{Moments, Proportion};

/// Default cap on processed clock firings.
pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ContactError {
    #[error("infection rate must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("horizon must be finite and positive, got {0}")]
    BadHorizon(f64),
    #[error("initial set is not contained in the restriction set")]
    NotSubset,
    #[error("coupled runs need W ⊆ W', A ⊆ A' and lambda ≤ lambda'")]
    NotOrdered,
    #[error(
        "event budget of {events} exhausted at time {time:.4} with {infected} infected sites; \
         the process may be exploding"
    )]
    BlowUp { events: u64, time: f64, infected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContactConfig {
    pub lambda: f64,
    pub horizon: f64,
    pub max_events: u64,
}

impl ContactConfig {
    pub fn new(lambda: f64, horizon: f64) -> Result<Self, ContactError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(ContactError::BadLambda(lambda));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(ContactError::BadHorizon(horizon));
        }
        Ok(ContactConfig {
            lambda,
            horizon,
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }
}

/// Outcome of one simulation up to extinction or the horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactRun {
    pub initial: VertexSet,
    pub restriction: VertexSet,
    /// First time the infected set is empty; `None` if it survived the horizon.
    pub extinction_time: Option<f64>,
    /// Infected set at `min(extinction, horizon)`.
    pub final_state: VertexSet,
    /// Arrows fired from an infected site of `W` to a vertex outside `W`,
    /// keyed by oriented edge, sorted.
    pub exit_counts: Vec<((Vertex, Vertex), u64)>,
    /// Successful infections of healthy sites inside `W`.
    pub total_infections: u64,
    pub event_count: u64,
}

impl ContactRun {
    pub fn censored(&self) -> bool {
        self.extinction_time.is_none()
    }

    pub fn exit_count(&self) -> u64 {
        self.exit_counts.iter().map(|e| e.1).sum()
    }

    /// Extinction time truncated at the horizon.
    pub fn truncated_time(&self, horizon: f64) -> f64 {
        self.extinction_time.unwrap_or(horizon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Clock {
    time: f64,
    site: Vertex,
}

impl Eq for Clock {}

impl Ord for Clock {
    // Reversed so that `BinaryHeap` pops the earliest clock.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.site.cmp(&self.site))
    }
}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_sets(g: &Graph, w: &VertexSet, a: &VertexSet) -> Result<(), ContactError> {
    w.check(g.n())?;
    a.check(g.n())?;
    if !a.is_subset(w) {
        return Err(ContactError::NotSubset);
    }
    Ok(())
}

fn sorted_exits(exits: FxHashMap<(Vertex, Vertex), u64>) -> Vec<((Vertex, Vertex), u64)> {
    let mut v: Vec<_> = exits.into_iter().collect();
    v.sort_unstable();
    v
}

/// Event-driven simulation of `xi^A_W` up to `cfg.horizon`.
pub fn run_contact(
    g: &Graph,
    w: &VertexSet,
    a: &VertexSet,
    cfg: &ContactConfig,
    rng: &mut StreamRng,
) -> Result<ContactRun, ContactError> {
    check_sets(g, w, a)?;
    let n = g.n();
    let in_w = w.to_mask(n);
    let mut infected = vec![false; n];
    let mut count = 0usize;
    let mut heap = BinaryHeap::with_capacity(a.len());
    let rate = |x: Vertex| 1.0 + cfg.lambda * g.degree(x) as f64;
    for &x in a.iter() {
        infected[x as usize] = true;
        count += 1;
        heap.push(Clock {
            time: rng.exp(rate(x)),
            site: x,
        });
    }
    let mut exits: FxHashMap<(Vertex, Vertex), u64> = FxHashMap::default();
    let mut total_infections = 0u64;
    let mut events = 0u64;
    let mut extinction_time = if count == 0 { Some(0.0) } else { None };

    while let Some(Clock { time, site: x }) = heap.pop() {
        if time > cfg.horizon {
            break;
        }
        if events == cfg.max_events {
            return Err(ContactError::BlowUp {
                events,
                time,
                infected: count,
            });
        }
        events += 1;
        let deg = g.degree(x);
        // Choose among recovery (weight 1) and the deg arrows (weight lambda each).
        let total = rate(x);
        let u = rng.uniform() * total;
        if u < 1.0 || deg == 0 {
            infected[x as usize] = false;
            count -= 1;
            if count == 0 {
                extinction_time = Some(time);
                break;
            }
            continue;
        }
        let k = (((u - 1.0) / cfg.lambda) as usize).min(deg - 1);
        let y = g.neighbors(x)[k];
        if !in_w[y as usize] {
            *exits.entry((x, y)).or_insert(0) += 1;
        } else if !infected[y as usize] {
            infected[y as usize] = true;
            count += 1;
            total_infections += 1;
            heap.push(Clock {
                time: time + rng.exp(rate(y)),
                site: y,
            });
        }
        heap.push(Clock {
            time: time + rng.exp(total),
            site: x,
        });
    }

    let final_state = if extinction_time.is_some() {
        VertexSet::new()
    } else {
        VertexSet::from_mask(&infected)
    };
    Ok(ContactRun {
        initial: a.clone(),
        restriction: w.clone(),
        extinction_time,
        final_state,
        exit_counts: sorted_exits(exits),
        total_infections,
        event_count: events,
    })
}

/// Independent runs on streams `(seed, i)`, in trial order.
pub fn run_trials(
    g: &Graph,
    w: &VertexSet,
    a: &VertexSet,
    cfg: &ContactConfig,
    seed: u64,
    trials: u64,
) -> Result<Vec<ContactRun>, ContactError> {
    check_sets(g, w, a)?;
    (0..trials)
        .into_par_iter()
        .map(|i| run_contact(g, w, a, cfg, &mut StreamRng::for_trial(seed, i)))
        .collect()
}

/// Censoring-aware summary of extinction times: the restricted mean
/// `E[min(T, horizon)]` together with the censoring count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtinctionSummary {
    pub runs: u64,
    pub censored: u64,
    pub restricted_mean: f64,
    pub std_error: f64,
}

pub fn extinction_summary(runs: &[ContactRun], horizon: f64) -> ExtinctionSummary {
    let m: Moments = runs.iter().map(|r| r.truncated_time(horizon)).collect();
    ExtinctionSummary {
        runs: runs.len() as u64,
        censored: runs.iter().filter(|r| r.censored()).count() as u64,
        restricted_mean: m.mean(),
        std_error: m.std_error(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum MarkKind {
    Recovery(Vertex),
    /// Arrow `x -> y` with its thinning uniform.
    Arrow(Vertex, Vertex, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Mark {
    time: f64,
    kind: MarkKind,
}

/// All Poisson marks on `[0, horizon]`: rate-1 recoveries per vertex and
/// rate-`lambda_max` arrows per oriented edge, each arrow tagged with a
/// uniform so that any `lambda <= lambda_max` is obtained by keeping arrows
/// with tag `< lambda / lambda_max`.
#[derive(Clone, Debug)]
pub struct GraphicalConstruction {
    pub horizon: f64,
    pub lambda_max: f64,
    marks: Vec<Mark>,
}

impl GraphicalConstruction {
    pub fn sample(
        g: &Graph,
        lambda_max: f64,
        horizon: f64,
        max_marks: u64,
        rng: &mut StreamRng,
    ) -> Result<Self, ContactError> {
        ContactConfig::new(lambda_max, horizon)?;
        let mut marks = Vec::new();
        let push = |marks: &mut Vec<Mark>, kind: MarkKind, time: f64| -> Result<(), ContactError> {
            if marks.len() as u64 == max_marks {
                return Err(ContactError::BlowUp {
                    events: max_marks,
                    time,
                    infected: 0,
                });
            }
            marks.push(Mark { time, kind });
            Ok(())
        };
        for x in 0..g.n() as Vertex {
            let mut t = rng.exp(1.0);
            while t <= horizon {
                push(&mut marks, MarkKind::Recovery(x), t)?;
                t += rng.exp(1.0);
            }
            if lambda_max > 0.0 {
                for &y in g.neighbors(x) {
                    let mut t = rng.exp(lambda_max);
                    while t <= horizon {
                        let tag = rng.uniform();
                        push(&mut marks, MarkKind::Arrow(x, y, tag), t)?;
                        t += rng.exp(lambda_max);
                    }
                }
            }
        }
        marks.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(GraphicalConstruction {
            horizon,
            lambda_max,
            marks,
        })
    }

    pub fn mark_count(&self) -> usize {
        self.marks.len()
    }

    fn keeps(&self, tag: f64, lambda: f64) -> bool {
        lambda >= self.lambda_max || tag * self.lambda_max < lambda
    }

    /// Runs `xi^A_W` at rate `lambda` on these marks.
    pub fn run(&self, g: &Graph, w: &VertexSet, a: &VertexSet, lambda: f64) -> Result<ContactRun, ContactError> {
        check_sets(g, w, a)?;
        let mut st = MarkState::new(g.n(), w, a);
        let mut exits: FxHashMap<(Vertex, Vertex), u64> = FxHashMap::default();
        let mut events = 0u64;
        let mut extinction_time = if st.count == 0 { Some(0.0) } else { None };
        for m in &self.marks {
            if extinction_time.is_some() {
                break;
            }
            events += 1;
            if let MarkKind::Arrow(x, y, tag) = m.kind {
                if !self.keeps(tag, lambda) {
                    continue;
                }
                if st.infected[x as usize] && !st.in_w[y as usize] {
                    *exits.entry((x, y)).or_insert(0) += 1;
                }
            }
            st.apply(m.kind, lambda, self);
            if st.count == 0 {
                extinction_time = Some(m.time);
            }
        }
        let final_state = VertexSet::from_mask(&st.infected);
        Ok(ContactRun {
            initial: a.clone(),
            restriction: w.clone(),
            extinction_time,
            final_state,
            exit_counts: sorted_exits(exits),
            total_infections: st.infections,
            event_count: events,
        })
    }
}

struct MarkState {
    in_w: Vec<bool>,
    infected: Vec<bool>,
    count: usize,
    infections: u64,
}

impl MarkState {
    fn new(n: usize, w: &VertexSet, a: &VertexSet) -> Self {
        MarkState {
            in_w: w.to_mask(n),
            infected: a.to_mask(n),
            count: a.len(),
            infections: 0,
        }
    }

    /// Applies one mark. Only the mark's target vertex can change.
    fn apply(&mut self, kind: MarkKind, lambda: f64, gc: &GraphicalConstruction) {
        match kind {
            MarkKind::Recovery(x) if self.infected[x as usize] => {
                self.infected[x as usize] = false;
                self.count -= 1;
            }
            MarkKind::Arrow(x, y, tag)
                if gc.keeps(tag, lambda)
                    && self.infected[x as usize]
                    && self.in_w[y as usize]
                    && !self.infected[y as usize] =>
            {
                self.infected[y as usize] = true;
                self.count += 1;
                self.infections += 1;
            }
            _ => {}
        }
    }
}

/// Drives `xi^A_W` at rate `lambda` and `xi^{A'}_{W'}` at rate `lambda'`
/// with one graphical construction and checks `xi^A_W(t) ⊆ xi^{A'}_{W'}(t)`
/// after every mark. Requires `W ⊆ W'`, `A ⊆ A'`, `lambda <= lambda'`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_monotonicity_check(
    g: &Graph,
    w: &VertexSet,
    w2: &VertexSet,
    a: &VertexSet,
    a2: &VertexSet,
    lambda: f64,
    lambda2: f64,
    horizon: f64,
    rng: &mut StreamRng,
) -> Result<bool, ContactError> {
    check_sets(g, w, a)?;
    check_sets(g, w2, a2)?;
    if !(w.is_subset(w2) && a.is_subset(a2) && lambda <= lambda2) {
        return Err(ContactError::NotOrdered);
    }
    ContactConfig::new(lambda, horizon)?;
    let gc = GraphicalConstruction::sample(g, lambda2, horizon, DEFAULT_MAX_EVENTS, rng)?;
    let n = g.n();
    let mut s1 = MarkState::new(n, w, a);
    let mut s2 = MarkState::new(n, w2, a2);
    // Number of sites infected in the first process but not the second.
    let mut excess = 0i64;
    let gap = |s1: &MarkState, s2: &MarkState, v: Vertex| (s1.infected[v as usize] && !s2.infected[v as usize]) as i64;
    for m in &gc.marks {
        let touched = match m.kind {
            MarkKind::Recovery(x) => x,
            MarkKind::Arrow(_, y, _) => y,
        };
        let before = gap(&s1, &s2, touched);
        s1.apply(m.kind, lambda, &gc);
        s2.apply(m.kind, lambda2, &gc);
        excess += gap(&s1, &s2, touched) - before;
        if excess != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityEstimate {
    /// `P{xi^A(t) ∩ B ≠ ∅}`.
    pub forward: Proportion,
    /// `P{xi^B(t) ∩ A ≠ ∅}`.
    pub backward: Proportion,
}

impl DualityEstimate {
    pub fn consistent(&self) -> bool {
        self.forward.overlaps(&self.backward)
    }
}

/// Monte Carlo estimates of both sides of the self-duality relation on the
/// unrestricted process. Forward and backward trials use disjoint streams.
#[allow(clippy::too_many_arguments)]
pub fn duality_estimate(
    g: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    t: f64,
    lambda: f64,
    trials: u64,
    seed: u64,
) -> Result<DualityEstimate, ContactError> {
    let all = VertexSet::range(0, g.n() as Vertex);
    check_sets(g, &all, a)?;
    check_sets(g, &all, b)?;
    if t == 0.0 {
        let hit = !a.intersection(b).is_empty() as u64 * trials;
        let p = Proportion::new(hit, trials);
        return Ok(DualityEstimate { forward: p, backward: p });
    }
    let cfg = ContactConfig::new(lambda, t)?;
    let side = |from: &VertexSet, to: &VertexSet, stream: u64| -> Result<Proportion, ContactError> {
        let key = derive(seed, stream);
        let hits: Result<Vec<bool>, ContactError> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let run = run_contact(g, &all, from, &cfg, &mut StreamRng::for_trial(key, i))?;
                Ok(!run.final_state.intersection(to).is_empty())
            })
            .collect();
        Ok(Proportion::new(hits?.into_iter().filter(|&h| h).count() as u64, trials))
    };
    Ok(DualityEstimate {
        forward: side(a, b, 0)?,
        backward: side(b, a, 1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::harmonic;

    fn all(n: usize) -> VertexSet {
        VertexSet::range(0, n as Vertex)
    }

    #[test]
    fn rejects_bad_input() {
        let g = Graph::path(3);
        assert_eq!(ContactConfig::new(-1.0, 1.0), Err(ContactError::BadLambda(-1.0)));
        assert_eq!(ContactConfig::new(1.0, 0.0), Err(ContactError::BadHorizon(0.0)));
        let cfg = ContactConfig::new(1.0, 1.0).unwrap();
        let r = run_contact(&g, &VertexSet::singleton(0), &VertexSet::singleton(1), &cfg, &mut StreamRng::new(0));
        assert_eq!(r, Err(ContactError::NotSubset));
    }

    #[test]
    fn independent_recoveries_at_zero_rate() {
        // With lambda = 0 the extinction time is the maximum of k Exp(1).
        let g = Graph::path(3);
        let cfg = ContactConfig::new(0.0, 1e6).unwrap();
        let runs = run_trials(&g, &all(3), &all(3), &cfg, 5, 40_000).unwrap();
        let s = extinction_summary(&runs, cfg.horizon);
        assert_eq!(s.censored, 0);
        assert!((s.restricted_mean - harmonic(3)).abs() < 4.0 * s.std_error);
        assert!(runs.iter().all(|r| r.total_infections == 0));
    }

    #[test]
    fn exits_only_leave_the_restriction() {
        let g = Graph::path(6);
        let w = VertexSet::range(1, 4);
        let cfg = ContactConfig::new(2.0, 5.0).unwrap();
        let runs = run_trials(&g, &w, &VertexSet::singleton(2), &cfg, 9, 500).unwrap();
        let mut seen = 0;
        for r in &runs {
            for &((x, y), c) in &r.exit_counts {
                assert!(w.contains(x) && !w.contains(y) && c > 0);
                seen += c;
            }
            assert!(r.final_state.is_subset(&w));
        }
        assert!(seen > 0);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Graph::path(50);
        let cfg = ContactConfig::new(5.0, 1e9).unwrap().with_max_events(1000);
        let r = run_contact(&g, &all(50), &all(50), &cfg, &mut StreamRng::new(1));
        assert!(matches!(r, Err(ContactError::BlowUp { events: 1000, .. })));
    }

    #[test]
    fn duality_at_time_zero_is_exact() {
        let g = Graph::path(5);
        let d = duality_estimate(&g, &VertexSet::singleton(1), &VertexSet::range(1, 3), 0.0, 1.0, 10, 0).unwrap();
        assert_eq!(d.forward.successes, 10);
        assert_eq!(d.backward.successes, 10);
        let d = duality_estimate(&g, &VertexSet::singleton(0), &VertexSet::singleton(4), 0.0, 1.0, 10, 0).unwrap();
        assert_eq!(d.forward.successes, 0);
    }

    #[test]
    fn identical_coupled_runs_agree() {
        let g = Graph::path(8);
        let a = VertexSet::range(2, 5);
        for s in 0..20 {
            let ok = coupling_monotonicity_check(&g, &all(8), &all(8), &a, &a, 1.5, 1.5, 4.0, &mut StreamRng::new(s));
            assert_eq!(ok, Ok(true));
        }
    }

    #[test]
    fn coupling_rejects_unordered_inputs() {
        let g = Graph::path(4);
        let r = coupling_monotonicity_check(
            &g,
            &all(4),
            &all(4),
            &all(4),
            &VertexSet::singleton(0),
            1.0,
            1.0,
            1.0,
            &mut StreamRng::new(0),
        );
        assert_eq!(r, Err(ContactError::NotOrdered));
    }

    #[test]
    fn shared_marks_preserve_containment() {
        let g = Graph::path(5);
        let gc = GraphicalConstruction::sample(&g, 1.0, 3.0, 1 << 20, &mut StreamRng::new(3)).unwrap();
        let big = gc.run(&g, &all(5), &all(5), 1.0).unwrap();
        let small = gc.run(&g, &all(5), &VertexSet::singleton(2), 1.0).unwrap();
        assert!(small.final_state.is_subset(&big.final_state));
    }

    #[test]
    fn marks_and_events_agree_in_law() {
        // Survival to t = 1 from one end of a 3-path, both samplers.
        let g = Graph::path(3);
        let cfg = ContactConfig::new(1.0, 1.0).unwrap();
        let trials = 20_000u64;
        let ev = run_trials(&g, &all(3), &VertexSet::singleton(0), &cfg, 11, trials)
            .unwrap()
            .iter()
            .filter(|r| r.censored())
            .count() as u64;
        let mk = (0..trials)
            .filter(|&i| {
                let gc = GraphicalConstruction::sample(&g, 1.0, 1.0, 1 << 20, &mut StreamRng::for_trial(12, i)).unwrap();
                gc.run(&g, &all(3), &VertexSet::singleton(0), 1.0).unwrap().censored()
            })
            .count() as u64;
        let (p1, p2) = (Proportion::new(ev, trials), Proportion::new(mk, trials));
        assert!(p1.overlaps(&p2), "{p1:?} vs {p2:?}");
    }

    #[test]
    fn thinning_keeps_the_expected_fraction() {
        let g = Graph::path(2);
        let gc = GraphicalConstruction::sample(&g, 4.0, 2000.0, 1 << 24, &mut StreamRng::new(8)).unwrap();
        let arrows: Vec<f64> = gc
            .marks
            .iter()
            .filter_map(|m| match m.kind {
                MarkKind::Arrow(_, _, tag) => Some(tag),
                _ => None,
            })
            .collect();
        let kept = arrows.iter().filter(|&&t| gc.keeps(t, 1.0)).count() as f64;
        assert!((kept / arrows.len() as f64 - 0.25).abs() < 0.02);
        assert!((arrows.len() as f64 / (2.0 * 4.0 * 2000.0) - 1.0).abs() < 0.05);
    }
}
