mod common;

use cmperc_core::cmp::{
    self, compute_cmp, compute_on, compute_partition, compute_partition_shuffled, descendant_closure, explore_stabiliser,
    is_admissible, is_stable, is_stable_with, stabiliser_iterative, CmpConfig, Metric, StableConfig,
};
use cmperc_core::graph::{Graph, VertexSet, WeightedGraph};
use cmperc_core::rng::StreamRng;
use cmperc_core::scalar::Exponent;
use common::*;
use proptest::prelude::*;

fn alphas() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::one()),
        Just(Exponent::parse("3/2").unwrap()),
        Just(Exponent::integer(2).unwrap()),
        Just(Exponent::parse("5/2").unwrap()),
    ]
}

fn instance(seed: u64, n: usize) -> (Graph, Vec<u64>) {
    let mut rng = StreamRng::new(seed);
    let extra = rng.below(n as u64 + 1) as usize;
    let g = random_graph(n, extra, &mut rng);
    let p = 0.2 + 0.6 * rng.uniform();
    let ws = random_int_weights(n, p, 2, &mut rng);
    (g, ws)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_matches_pairwise_merging(seed in any::<u64>(), n in 1usize..40, alpha in alphas()) {
        let (g, ws) = instance(seed, n);
        let dist = all_pairs(&g);
        let want = naive_cmp(&dist, &ws, &vec![true; n], |d, w| within_int(d, w, &alpha));
        let wg = WeightedGraph::new(g, ws).unwrap();
        let cfg = CmpConfig::new(alpha);
        let got = compute_partition(&wg, &cfg).labels();
        prop_assert_eq!(&got, &want);
        prop_assert!(is_admissible(&wg, &got, &cfg));
    }

    #[test]
    fn float_engine_matches_pairwise_merging(seed in any::<u64>(), n in 1usize..30, alpha in alphas()) {
        let (g, _) = instance(seed, n);
        let mut rng = StreamRng::new(seed ^ 0x55);
        let ws: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { 0.0 } else { 3.0 * rng.uniform() }).collect();
        let dist = all_pairs(&g);
        let want = naive_cmp(&dist, &ws, &vec![true; n], |d, w| within_f64(d, w, &alpha));
        let wg = WeightedGraph::new(g, ws).unwrap();
        let got = compute_partition(&wg, &CmpConfig::new(alpha)).labels();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn restricted_partitions_match(seed in any::<u64>(), n in 2usize..35, alpha in alphas()) {
        let (g, ws) = instance(seed, n);
        let mut rng = StreamRng::new(seed.wrapping_add(7));
        let mask: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.7).collect();
        let set = VertexSet::from_mask(&mask);
        let ind = naive_cmp(&all_pairs_induced(&g, &mask), &ws, &mask, |d, w| within_int(d, w, &alpha));
        let amb = naive_cmp(&all_pairs(&g), &ws, &mask, |d, w| within_int(d, w, &alpha));
        let wg = WeightedGraph::new(g, ws).unwrap();
        let cfg = CmpConfig::new(alpha);
        prop_assert_eq!(compute_on(&wg, &set, Metric::Induced, &cfg).labels(), ind);
        prop_assert_eq!(compute_on(&wg, &set, Metric::Ambient, &cfg).labels(), amb);
    }

    #[test]
    fn schedules_agree(seed in any::<u64>(), n in 1usize..120, alpha in alphas()) {
        let (g, ws) = instance(seed, n);
        let wg = WeightedGraph::new(g, ws).unwrap();
        let cfg = CmpConfig::new(alpha);
        let base = compute_partition(&wg, &cfg).labels();
        for k in 0..5 {
            let other = compute_partition_shuffled(&wg, &cfg, StreamRng::new(seed ^ k)).labels();
            prop_assert_eq!(&other, &base);
        }
    }

    #[test]
    fn stabilisers_agree(seed in any::<u64>(), n in 1usize..60, alpha in alphas()) {
        let (g, ws) = instance(seed, n);
        let wg = WeightedGraph::new(g, ws).unwrap();
        let cfg = CmpConfig::new(alpha);
        let res = compute_cmp(&wg, &cfg);
        let global = res.labels();
        for x in 0..n as u32 {
            let it = stabiliser_iterative(&wg, &res, &VertexSet::singleton(x));
            let dc = descendant_closure(&res, res.index_of(x).unwrap());
            prop_assert_eq!(&it, &dc);
            prop_assert!(is_stable(&wg, &it, &cfg));
            let ex = explore_stabiliser(&wg, x, &cfg, usize::MAX, None);
            prop_assert!(ex.is_stable());
            prop_assert_eq!(&ex.stabiliser, &it);
            for &v in &it {
                prop_assert_eq!(ex.local.labels()[v as usize], local_min(&global, &it, v));
            }
        }
    }

    #[test]
    fn stability_matches_ball_union(seed in any::<u64>(), n in 1usize..30, alpha in alphas()) {
        let (g, ws) = instance(seed, n);
        let mut rng = StreamRng::new(seed ^ 0xabc);
        let dist = all_pairs(&g);
        let wg = WeightedGraph::new(g, ws.clone()).unwrap();
        let cfg = CmpConfig::new(alpha.clone());
        let res = compute_cmp(&wg, &cfg);
        for _ in 0..6 {
            let mask: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.6).collect();
            let h = VertexSet::from_mask(&mask);
            // Union of balls B(x, r(C_x)^alpha) with global clusters.
            let union_is_h = (0..n).filter(|&x| mask[x]).all(|x| {
                let w = res.cluster(x as u32).weight;
                (0..n).all(|y| !within_int(dist[x][y], w, &alpha) || mask[y])
            });
            let s = is_stable(&wg, &h, &cfg);
            prop_assert_eq!(s, union_is_h);
            let amb = is_stable_with(&wg, &h, &cfg, &StableConfig { partition_metric: Metric::Ambient });
            prop_assert_eq!(s, amb);
        }
    }
}

/// Minimum member of the global cluster of `v`; the exploration's partition
/// of a stable set equals the restriction of the global one.
fn local_min(global: &[u32], set: &VertexSet, v: u32) -> u32 {
    let l = global[v as usize];
    set.iter().copied().filter(|&u| global[u as usize] == l).min().unwrap()
}

#[test]
fn exploration_touches_only_its_result() {
    let (g, ws) = instance(99, 300);
    let wg = WeightedGraph::new(g, ws).unwrap();
    let cfg = CmpConfig::new(Exponent::one());
    for x in (0..300).step_by(17) {
        let ex = explore_stabiliser(&wg, x, &cfg, usize::MAX, None);
        assert!(ex.touched.is_subset(&ex.stabiliser));
    }
    let _ = cmp::diameter_bound_f(1.0, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn large_clusters_match_pairwise_merging(seed in any::<u64>(), n in 100usize..220, alpha in alphas()) {
        let mut rng = StreamRng::new(seed);
        let extra = rng.below(20) as usize;
        let g = random_graph(n, extra, &mut rng);
        let ws = random_int_weights(n, 0.55, 1, &mut rng);
        let dist = all_pairs(&g);
        let want = naive_cmp(&dist, &ws, &vec![true; n], |d, w| within_int(d, w, &alpha));
        let wg = WeightedGraph::new(g, ws).unwrap();
        let cfg = CmpConfig::new(alpha);
        prop_assert_eq!(compute_partition(&wg, &cfg).labels(), want.clone());
        prop_assert_eq!(compute_partition_shuffled(&wg, &cfg, StreamRng::new(seed)).labels(), want);
        let res = compute_cmp(&wg, &cfg);
        for x in (0..n as u32).step_by(9) {
            let it = stabiliser_iterative(&wg, &res, &VertexSet::singleton(x));
            let ex = explore_stabiliser(&wg, x, &cfg, usize::MAX, None);
            prop_assert_eq!(ex.stabiliser, it);
        }
    }
}
